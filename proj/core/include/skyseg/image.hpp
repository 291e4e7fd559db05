#pragma once

// 8-bit images and label maps plus netpbm (P6/P5) I/O. RGB data is stored
// planar (3 x H x W); PPM files are interleaved and converted on the way
// in/out. Writers go through a temp file and rename on success.

#include <cstdint>
#include <filesystem>
#include <vector>

namespace skyseg {

struct Image {
  std::size_t h = 0, w = 0;
  std::vector<std::uint8_t> pix;  // planar: channel, then row, then column

  std::uint8_t at(std::size_t c, std::size_t y, std::size_t x) const {
    return pix[(c * h + y) * w + x];
  }
  std::uint8_t& at(std::size_t c, std::size_t y, std::size_t x) {
    return pix[(c * h + y) * w + x];
  }
  static Image blank(std::size_t h, std::size_t w) {
    return {h, w, std::vector<std::uint8_t>(3 * h * w, 0)};
  }
};

struct LabelMap {
  std::size_t h = 0, w = 0;
  std::vector<std::uint8_t> v;

  std::uint8_t at(std::size_t y, std::size_t x) const { return v[y * w + x]; }
  std::uint8_t& at(std::size_t y, std::size_t x) { return v[y * w + x]; }
  static LabelMap filled(std::size_t h, std::size_t w, std::uint8_t value) {
    return {h, w, std::vector<std::uint8_t>(h * w, value)};
  }
};

// maxval must be 255; '#' comment lines in the header are tolerated.
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& img);

LabelMap read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const LabelMap& mask);

}  // namespace skyseg

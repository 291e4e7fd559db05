#include "skyseg/image.hpp"

#include <fstream>
#include <string>

#include "skyseg/errors.hpp"

namespace skyseg {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in, const std::filesystem::path& path) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {}
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(char(ch));
  }
  if (tok.empty()) throw FormatError("netpbm: truncated header in " + path.string());
  return tok;
}

struct Header {
  std::size_t w, h;
};

Header read_header(std::istream& in, const std::filesystem::path& path, const char* magic) {
  if (next_token(in, path) != magic)
    throw FormatError("netpbm: expected magic " + std::string(magic) + " in " + path.string());
  Header hd{};
  try {
    hd.w = std::stoul(next_token(in, path));
    hd.h = std::stoul(next_token(in, path));
    if (std::stoul(next_token(in, path)) != 255)
      throw FormatError("netpbm: only maxval 255 is supported (" + path.string() + ")");
  } catch (const std::invalid_argument&) {
    throw FormatError("netpbm: malformed header in " + path.string());
  }
  return hd;
  // header ends with the single whitespace byte consumed by next_token
}

void read_payload(std::istream& in, std::vector<std::uint8_t>& buf,
                  const std::filesystem::path& path) {
  in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  if (std::size_t(in.gcount()) != buf.size())
    throw FormatError("netpbm: truncated payload in " + path.string());
}

void atomic_write(const std::filesystem::path& path, const std::string& header,
                  const std::uint8_t* data, std::size_t size) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out << header;
    out.write(reinterpret_cast<const char*>(data), std::streamsize(size));
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  Header hd = read_header(in, path, "P6");
  std::vector<std::uint8_t> raw(3 * hd.w * hd.h);
  read_payload(in, raw, path);
  Image img = Image::blank(hd.h, hd.w);
  for (std::size_t i = 0; i < hd.w * hd.h; ++i)
    for (std::size_t c = 0; c < 3; ++c) img.pix[c * hd.w * hd.h + i] = raw[3 * i + c];
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::vector<std::uint8_t> raw(3 * img.w * img.h);
  for (std::size_t i = 0; i < img.w * img.h; ++i)
    for (std::size_t c = 0; c < 3; ++c) raw[3 * i + c] = img.pix[c * img.w * img.h + i];
  std::string header =
      "P6\n" + std::to_string(img.w) + " " + std::to_string(img.h) + "\n255\n";
  atomic_write(path, header, raw.data(), raw.size());
}

LabelMap read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  Header hd = read_header(in, path, "P5");
  LabelMap mask{hd.h, hd.w, std::vector<std::uint8_t>(hd.w * hd.h)};
  read_payload(in, mask.v, path);
  return mask;
}

void write_pgm(const std::filesystem::path& path, const LabelMap& mask) {
  std::string header =
      "P5\n" + std::to_string(mask.w) + " " + std::to_string(mask.h) + "\n255\n";
  atomic_write(path, header, mask.v.data(), mask.v.size());
}

}  // namespace skyseg

#pragma once

// Sliding-window decomposition of a large image into overlapping S x S
// tiles, and the inverse stitch that averages per-tile probability maps
// back into a full map. Origins per axis are 0, stride, 2*stride, ... with
// the last origin clamped to dim - S, so every pixel is covered and no tile
// extends past the image.

#include <cstddef>
#include <vector>

#include "skyseg/tensor.hpp"

namespace skyseg {

struct TileGrid {
  std::size_t height = 0, width = 0;
  std::size_t tile = 0;
  std::vector<std::size_t> ys, xs;  // per-axis origins, strictly increasing

  struct Origin {
    std::size_t y, x;
  };
  std::size_t count() const { return ys.size() * xs.size(); }
  Origin origin(std::size_t i) const { return {ys[i / xs.size()], xs[i % xs.size()]}; }

  // overlap is a fraction in [0, 1); stride = round(S * (1 - overlap)).
  static TileGrid make(std::size_t height, std::size_t width, std::size_t tile,
                       double overlap);
};

// Extracts tile i of a [C,H,W] map as a [C,S,S] copy.
template <class T>
std::vector<T> extract_tile(const TileGrid& g, const std::vector<T>& map,
                            std::size_t channels, std::size_t i) {
  auto o = g.origin(i);
  std::vector<T> out(channels * g.tile * g.tile);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t y = 0; y < g.tile; ++y)
      for (std::size_t x = 0; x < g.tile; ++x)
        out[(c * g.tile + y) * g.tile + x] =
            map[(c * g.height + o.y + y) * g.width + o.x + x];
  return out;
}

// Uniform-average fusion of per-tile [C,S,S] maps into a full [C,H,W] map.
// Accumulates in double regardless of T.
template <class T>
std::vector<T> stitch(const TileGrid& g, const std::vector<std::vector<T>>& tiles,
                      std::size_t channels) {
  if (tiles.size() != g.count())
    throw ShapeError("stitch: expected " + std::to_string(g.count()) + " tiles, got " +
                     std::to_string(tiles.size()));
  std::vector<double> acc(channels * g.height * g.width, 0.0);
  std::vector<std::uint32_t> hits(g.height * g.width, 0);
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (tiles[i].size() != channels * g.tile * g.tile)
      throw ShapeError("stitch: tile " + std::to_string(i) + " has wrong size");
    auto o = g.origin(i);
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t y = 0; y < g.tile; ++y)
        for (std::size_t x = 0; x < g.tile; ++x)
          acc[(c * g.height + o.y + y) * g.width + o.x + x] +=
              double(tiles[i][(c * g.tile + y) * g.tile + x]);
    for (std::size_t y = 0; y < g.tile; ++y)
      for (std::size_t x = 0; x < g.tile; ++x) ++hits[(o.y + y) * g.width + o.x + x];
  }
  std::vector<T> out(acc.size());
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t p = 0; p < g.height * g.width; ++p)
      out[c * g.height * g.width + p] =
          T(acc[c * g.height * g.width + p] / double(hits[p]));
  return out;
}

// Per-pixel argmax of a [C,H,W] map; ties go to the lowest class index.
template <class T>
std::vector<std::uint8_t> argmax_map(const std::vector<T>& map, std::size_t channels,
                                     std::size_t height, std::size_t width) {
  std::vector<std::uint8_t> out(height * width, 0);
  for (std::size_t p = 0; p < height * width; ++p) {
    T best = map[p];
    for (std::size_t c = 1; c < channels; ++c) {
      T v = map[c * height * width + p];
      if (v > best) {
        best = v;
        out[p] = std::uint8_t(c);
      }
    }
  }
  return out;
}

}  // namespace skyseg

#include "skyseg/tiling.hpp"

#include <cmath>

#include "skyseg/errors.hpp"

namespace skyseg {

namespace {

std::vector<std::size_t> axis_origins(std::size_t dim, std::size_t tile,
                                      std::size_t stride) {
  std::vector<std::size_t> out;
  for (std::size_t o = 0;; o += stride) {
    if (o + tile >= dim) {
      std::size_t last = dim - tile;
      if (out.empty() || out.back() != last) out.push_back(last);
      break;
    }
    out.push_back(o);
  }
  return out;
}

}  // namespace

TileGrid TileGrid::make(std::size_t height, std::size_t width, std::size_t tile,
                        double overlap) {
  if (tile == 0 || tile > height || tile > width)
    throw ShapeError("tile size " + std::to_string(tile) + " exceeds image dims " +
                     std::to_string(height) + "x" + std::to_string(width));
  if (!(overlap >= 0.0 && overlap < 1.0))
    throw ConfigError("tile overlap must be in [0, 1)");
  auto stride = std::size_t(std::llround(double(tile) * (1.0 - overlap)));
  if (stride == 0) stride = 1;
  TileGrid g;
  g.height = height;
  g.width = width;
  g.tile = tile;
  g.ys = axis_origins(height, tile, stride);
  g.xs = axis_origins(width, tile, stride);
  return g;
}

}  // namespace skyseg

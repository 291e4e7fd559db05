#pragma once

// Procedural generator of aerial-like labeled scenes: vegetation background,
// building rectangles, road bands with sidewalks, dashed lane markings along
// road centers, and vehicle rectangles on roads. Paint order (vegetation <
// buildings < roads/sidewalks < markings < vehicles) mirrors the physical
// overlay rule: later primitives overwrite earlier ones.

#include <cstdint>
#include <string>

#include "skyseg/image.hpp"

namespace skyseg {

struct SceneSpec {
  std::uint64_t seed = 0;
  std::size_t height = 512, width = 512;
  // expected primitive counts; primitive sizes scale with the canvas
  double road_density = 3.0;
  double building_density = 10.0;
  double vehicle_density = 12.0;
  bool lane_markings = true;
  double noise = 8.0;  // per-pixel color jitter amplitude
};

struct LabeledScene {
  Image rgb;
  LabelMap mask;  // dense20 labels
};

LabeledScene generate_scene(const SceneSpec& spec);

}  // namespace skyseg

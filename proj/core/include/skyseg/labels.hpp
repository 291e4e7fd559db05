#pragma once

// Class alphabets, total label-to-label mappings, edge ground-truth
// derivation, flip augmentation, and GSD rescaling.

#include <cstdint>
#include <string>
#include <vector>

#include "skyseg/image.hpp"

namespace skyseg {

// A total mapping from one label alphabet to another; every source class
// has a target.
struct ClassMap {
  std::vector<std::string> source_names;
  std::vector<std::string> target_names;
  std::vector<std::uint8_t> to_target;  // indexed by source class

  void validate() const;
};

const std::vector<std::string>& dense20_names();
const std::vector<std::string>& potsdam6_names();
const std::vector<std::string>& category11_names();
const std::vector<std::string>& lane13_names();

const std::vector<std::string>& class_set_names(const std::string& class_set);

ClassMap dense20_to_potsdam6();
ClassMap dense20_to_category11();

LabelMap merge_classes(const LabelMap& mask, const ClassMap& map);

// A pixel is edge iff any 4-neighbor carries a different label; the edge
// set is then dilated by Chebyshev radius r-1. The multi-class map labels
// edge pixels with their own mask class and everything else with the
// background class 0.
struct EdgeMaps {
  LabelMap binary;  // 0 = non-edge, 1 = edge
  LabelMap multi;
};
EdgeMaps derive_edges(const LabelMap& mask, std::size_t radius = 2);

enum class FlipMode { Horizontal, Vertical };
void flip_augment(Image& img, LabelMap& mask, FlipMode mode);

// Scale factor = source_gsd / target_gsd; the image is resampled
// bilinearly, the mask by nearest neighbor. Output dims round to the
// nearest integer, minimum 1.
Image rescale_gsd(const Image& img, double source_gsd, double target_gsd);
LabelMap rescale_gsd(const LabelMap& mask, double source_gsd, double target_gsd);

}  // namespace skyseg

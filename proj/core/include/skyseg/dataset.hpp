#pragma once

// On-disk dataset layout (images/NNNN.ppm, masks/NNNN.pgm, manifest.txt)
// and the bridge from labeled samples to network inputs and per-branch
// one-hot targets.

#include <filesystem>
#include <string>
#include <vector>

#include "skyseg/image.hpp"
#include "skyseg/network.hpp"
#include "skyseg/tensor.hpp"

namespace skyseg {

struct SampleInfo {
  std::string id;
  std::size_t width = 0, height = 0;
  std::string class_set;  // alphabet of the stored mask
};

struct Dataset {
  std::filesystem::path root;
  std::vector<SampleInfo> samples;

  static Dataset open(const std::filesystem::path& root);

  Image image(std::size_t i) const;
  LabelMap mask(std::size_t i) const;
};

// manifest.txt: one "id,width,height,class_set" line per sample
void write_manifest(const std::filesystem::path& root,
                    const std::vector<SampleInfo>& samples);

// [1,3,H,W] float image scaled to [0,1]
template <class T>
Tensor<T> image_to_tensor(const Image& img) {
  std::vector<T> v(img.pix.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = T(img.pix[i]) / T(255);
  return Tensor<T>::from_data({1, 3, img.h, img.w}, std::move(v));
}

// [1,C,H,W] one-hot encoding of a label map
template <class T>
Tensor<T> onehot_mask(const LabelMap& mask, std::size_t classes) {
  std::vector<T> v(classes * mask.v.size(), T(0));
  for (std::size_t p = 0; p < mask.v.size(); ++p) {
    if (mask.v[p] >= classes)
      throw DataError("mask label " + std::to_string(mask.v[p]) + " >= class count " +
                      std::to_string(classes));
    v[std::size_t(mask.v[p]) * mask.v.size() + p] = T(1);
  }
  return Tensor<T>::from_data({1, classes, mask.h, mask.w}, std::move(v));
}

// Ground-truth label maps for each branch of a task, derived from a dense20
// mask (merging for category11, edge derivation for the edge branches).
std::vector<LabelMap> branch_label_maps(Task task, const LabelMap& mask);

template <class T>
std::vector<Tensor<T>> branch_targets(Task task, const LabelMap& mask,
                                      const std::vector<BranchSpec>& specs) {
  auto maps = branch_label_maps(task, mask);
  if (maps.size() != specs.size()) throw ShapeError("branch_targets: spec mismatch");
  std::vector<Tensor<T>> out;
  for (std::size_t b = 0; b < maps.size(); ++b)
    out.push_back(onehot_mask<T>(maps[b], specs[b].classes));
  return out;
}

}  // namespace skyseg

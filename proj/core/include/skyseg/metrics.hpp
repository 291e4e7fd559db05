#pragma once

// Confusion-matrix accumulation and the segmentation metric suite:
// per-class IoU, mean IoU, frequency-weighted IoU, pixel accuracy, and
// mean precision/recall. Rows index ground truth, columns prediction.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace skyseg {

class ConfusionMatrix {
public:
  explicit ConfusionMatrix(std::size_t classes);

  std::size_t classes() const { return classes_; }
  std::uint64_t at(std::size_t gt, std::size_t pred) const;
  std::uint64_t total() const;

  // Pixels whose ground-truth label equals ignore_label are skipped.
  void accumulate(std::span<const std::uint8_t> gt, std::span<const std::uint8_t> pred,
                  std::optional<std::uint8_t> ignore_label = std::nullopt);
  void add(std::size_t gt, std::size_t pred, std::uint64_t count = 1);

  // Elementwise addition, so tiles can be scored independently and reduced.
  void merge(const ConfusionMatrix& other);

  std::uint64_t true_positives(std::size_t c) const;
  std::uint64_t false_positives(std::size_t c) const;
  std::uint64_t false_negatives(std::size_t c) const;

  // nullopt for classes that never occur in either ground truth or
  // prediction; such classes are excluded from every mean below.
  std::optional<double> iou(std::size_t c) const;
  std::optional<double> precision(std::size_t c) const;
  std::optional<double> recall(std::size_t c) const;

  double mean_iou() const;
  double fw_iou() const;
  double pixel_accuracy() const;
  double mean_precision() const;
  double mean_recall() const;

  // CSV report: header, one row per class, then a summary row carrying
  // (total scored pixels, mIoU, FWIoU, PA) in the tp/iou/precision/recall
  // columns. UTF-8, LF line endings.
  std::string report(const std::vector<std::string>& class_names) const;

private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;  // row-major C x C
};

}  // namespace skyseg

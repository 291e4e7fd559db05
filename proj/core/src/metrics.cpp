#include "skyseg/metrics.hpp"

#include <sstream>

#include "skyseg/errors.hpp"

namespace skyseg {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {
  if (classes == 0) throw ShapeError("ConfusionMatrix: class count must be positive");
}

std::uint64_t ConfusionMatrix::at(std::size_t gt, std::size_t pred) const {
  return counts_[gt * classes_ + pred];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (auto v : counts_) n += v;
  return n;
}

void ConfusionMatrix::accumulate(std::span<const std::uint8_t> gt,
                                 std::span<const std::uint8_t> pred,
                                 std::optional<std::uint8_t> ignore_label) {
  if (gt.size() != pred.size())
    throw ShapeError("accumulate: label maps differ in size");
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (ignore_label && gt[i] == *ignore_label) continue;
    if (gt[i] >= classes_ || pred[i] >= classes_)
      throw ShapeError("accumulate: label out of range at pixel " + std::to_string(i));
    ++counts_[std::size_t(gt[i]) * classes_ + pred[i]];
  }
}

void ConfusionMatrix::add(std::size_t gt, std::size_t pred, std::uint64_t count) {
  if (gt >= classes_ || pred >= classes_) throw ShapeError("add: label out of range");
  counts_[gt * classes_ + pred] += count;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw ShapeError("merge: class count mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::true_positives(std::size_t c) const { return at(c, c); }

std::uint64_t ConfusionMatrix::false_positives(std::size_t c) const {
  std::uint64_t n = 0;
  for (std::size_t g = 0; g < classes_; ++g)
    if (g != c) n += at(g, c);
  return n;
}

std::uint64_t ConfusionMatrix::false_negatives(std::size_t c) const {
  std::uint64_t n = 0;
  for (std::size_t p = 0; p < classes_; ++p)
    if (p != c) n += at(c, p);
  return n;
}

std::optional<double> ConfusionMatrix::iou(std::size_t c) const {
  std::uint64_t tp = true_positives(c);
  std::uint64_t den = tp + false_positives(c) + false_negatives(c);
  if (den == 0) return std::nullopt;
  return double(tp) / double(den);
}

std::optional<double> ConfusionMatrix::precision(std::size_t c) const {
  std::uint64_t tp = true_positives(c);
  std::uint64_t den = tp + false_positives(c);
  if (den == 0) return std::nullopt;
  return double(tp) / double(den);
}

std::optional<double> ConfusionMatrix::recall(std::size_t c) const {
  std::uint64_t tp = true_positives(c);
  std::uint64_t den = tp + false_negatives(c);
  if (den == 0) return std::nullopt;
  return double(tp) / double(den);
}

double ConfusionMatrix::mean_iou() const {
  double s = 0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < classes_; ++c)
    if (auto v = iou(c)) {
      s += *v;
      ++n;
    }
  return n ? s / double(n) : 0.0;
}

double ConfusionMatrix::fw_iou() const {
  std::uint64_t n = total();
  if (n == 0) return 0.0;
  double s = 0;
  for (std::size_t c = 0; c < classes_; ++c) {
    std::uint64_t freq = true_positives(c) + false_negatives(c);  // row sum
    if (freq == 0) continue;
    if (auto v = iou(c)) s += double(freq) / double(n) * *v;
  }
  return s;
}

double ConfusionMatrix::pixel_accuracy() const {
  std::uint64_t n = total();
  if (n == 0) return 0.0;
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < classes_; ++c) trace += at(c, c);
  return double(trace) / double(n);
}

double ConfusionMatrix::mean_precision() const {
  double s = 0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < classes_; ++c)
    if (auto v = precision(c)) {
      s += *v;
      ++n;
    }
  return n ? s / double(n) : 0.0;
}

double ConfusionMatrix::mean_recall() const {
  double s = 0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < classes_; ++c)
    if (auto v = recall(c)) {
      s += *v;
      ++n;
    }
  return n ? s / double(n) : 0.0;
}

std::string ConfusionMatrix::report(const std::vector<std::string>& class_names) const {
  if (class_names.size() != classes_)
    throw ShapeError("report: expected " + std::to_string(classes_) + " class names, got " +
                     std::to_string(class_names.size()));
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "class,tp,fp,fn,iou,precision,recall\n";
  auto opt = [&](std::optional<double> v) { return v ? std::to_string(*v) : std::string(); };
  for (std::size_t c = 0; c < classes_; ++c) {
    os << class_names[c] << ',' << true_positives(c) << ',' << false_positives(c) << ','
       << false_negatives(c) << ',' << opt(iou(c)) << ',' << opt(precision(c)) << ','
       << opt(recall(c)) << '\n';
  }
  os << "summary," << total() << ",,," << mean_iou() << ',' << fw_iou() << ','
     << pixel_accuracy() << '\n';
  return os.str();
}

}  // namespace skyseg

#pragma once

// Loss functions over per-pixel class probability maps and one-hot targets.
//
// Conventions shared by all three losses: the class axis is explicit; every
// other axis indexes pixel locations. Cross-entropy follows
//   L = -(1/C) sum_c w_c sum_n y_nc log(p_nc)
// with no pixel-count normalization. Soft-IoU and Soft-Dice are negative
// overlap ratios averaged over the classes present in the target; classes
// with no ground-truth pixels are excluded from the average, so a perfect
// prediction scores exactly -1 regardless of which classes occur.

#include <cstddef>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "skyseg/tensor.hpp"

namespace skyseg {

enum class LossCombo { CE, SoftIoU, SoftDice, CEPlusSoftIoU, CEPlusSoftDice };

LossCombo parse_loss_combo(const std::string& s);
const char* loss_combo_name(LossCombo c);

namespace detail {

struct ClassIndexer {
  std::size_t classes, inner;
  std::size_t class_of(std::size_t flat) const { return (flat / inner) % classes; }
};

template <class T>
ClassIndexer check_loss_args(const Tensor<T>& probs, const Tensor<T>& onehot,
                             std::size_t class_axis) {
  if (probs.dims() != onehot.dims())
    throw ShapeError("loss: probs/onehot shape mismatch " + shape_str(probs.dims()) +
                     " vs " + shape_str(onehot.dims()));
  if (class_axis >= probs.rank()) throw ShapeError("loss: bad class axis");
  std::size_t inner = 1;
  for (std::size_t d = class_axis + 1; d < probs.rank(); ++d) inner *= probs.dims()[d];
  return {probs.dims()[class_axis], inner};
}

}  // namespace detail

// Probabilities below this are clamped inside cross_entropy (with a warning)
// instead of producing inf/NaN.
inline constexpr double kProbFloor = 1e-12;

template <class T>
Tensor<T> cross_entropy(const Tensor<T>& probs, const Tensor<T>& onehot,
                        std::size_t class_axis = 1,
                        const std::vector<T>& class_weights = {}) {
  auto ix = detail::check_loss_args(probs, onehot, class_axis);
  if (!class_weights.empty() && class_weights.size() != ix.classes)
    throw ShapeError("cross_entropy: weight count != class count");

  auto pd = probs.data();
  auto yd = onehot.data();
  T loss = 0;
  bool warned = false;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    if (yd[i] == T(0)) continue;
    T p = pd[i];
    if (p < T(kProbFloor)) {
      if (!warned) {
        std::cerr << "skyseg: cross_entropy clamped probability " << p
                  << " at a true-class pixel\n";
        warned = true;
      }
      p = T(kProbFloor);
    }
    T w = class_weights.empty() ? T(1) : class_weights[ix.class_of(i)];
    loss -= w * yd[i] * std::log(p);
  }
  loss /= T(ix.classes);

  auto pn = probs.node();
  std::vector<T> y(yd.begin(), yd.end());
  std::vector<T> w = class_weights;
  return Tensor<T>::make_op(
      {}, {loss}, {probs},
      [pn, y = std::move(y), w = std::move(w), ix](typename Tensor<T>::Node& self) {
        T g = self.grad[0] / T(ix.classes);
        auto& gp = pn->grad_buf();
        for (std::size_t i = 0; i < y.size(); ++i) {
          if (y[i] == T(0) || pn->data[i] < T(kProbFloor)) continue;
          T wc = w.empty() ? T(1) : w[ix.class_of(i)];
          gp[i] -= g * wc * y[i] / pn->data[i];
        }
      });
}

template <class T>
Tensor<T> soft_iou_loss(const Tensor<T>& probs, const Tensor<T>& onehot,
                        std::size_t class_axis = 1) {
  auto ix = detail::check_loss_args(probs, onehot, class_axis);
  auto pd = probs.data();
  auto yd = onehot.data();

  std::vector<T> num(ix.classes, T(0)), den(ix.classes, T(0));
  std::vector<char> present(ix.classes, 0);
  for (std::size_t i = 0; i < pd.size(); ++i) {
    std::size_t c = ix.class_of(i);
    num[c] += yd[i] * pd[i];
    den[c] += yd[i] + pd[i] - yd[i] * pd[i];
    if (yd[i] != T(0)) present[c] = 1;
  }
  std::size_t n_present = 0;
  T loss = 0;
  for (std::size_t c = 0; c < ix.classes; ++c) {
    if (!present[c] || den[c] == T(0)) continue;
    ++n_present;
    loss -= num[c] / den[c];
  }
  if (n_present) loss /= T(n_present);

  auto pn = probs.node();
  std::vector<T> y(yd.begin(), yd.end());
  return Tensor<T>::make_op(
      {}, {loss}, {probs},
      [pn, y = std::move(y), num, den, present, n_present, ix](typename Tensor<T>::Node& self) {
        if (!n_present) return;
        T g = self.grad[0] / T(n_present);
        auto& gp = pn->grad_buf();
        for (std::size_t i = 0; i < y.size(); ++i) {
          std::size_t c = ix.class_of(i);
          if (!present[c] || den[c] == T(0)) continue;
          // d(num/den)/dp = (y*den - num*(1-y)) / den^2
          T d = (y[i] * den[c] - num[c] * (T(1) - y[i])) / (den[c] * den[c]);
          gp[i] -= g * d;
        }
      });
}

// Default denominator is the V-Net form sum(y^2)+sum(p^2); setting
// squared_sums uses the literal (sum y)^2 + (sum p)^2 reading instead.
template <class T>
Tensor<T> soft_dice_loss(const Tensor<T>& probs, const Tensor<T>& onehot,
                         std::size_t class_axis = 1, bool squared_sums = false) {
  auto ix = detail::check_loss_args(probs, onehot, class_axis);
  auto pd = probs.data();
  auto yd = onehot.data();

  std::vector<T> num(ix.classes, T(0)), sy(ix.classes, T(0)), sp(ix.classes, T(0));
  std::vector<char> present(ix.classes, 0);
  for (std::size_t i = 0; i < pd.size(); ++i) {
    std::size_t c = ix.class_of(i);
    num[c] += yd[i] * pd[i];
    if (squared_sums) {
      sy[c] += yd[i];
      sp[c] += pd[i];
    } else {
      sy[c] += yd[i] * yd[i];
      sp[c] += pd[i] * pd[i];
    }
    if (yd[i] != T(0)) present[c] = 1;
  }
  std::vector<T> den(ix.classes);
  for (std::size_t c = 0; c < ix.classes; ++c)
    den[c] = squared_sums ? sy[c] * sy[c] + sp[c] * sp[c] : sy[c] + sp[c];

  std::size_t n_present = 0;
  T loss = 0;
  for (std::size_t c = 0; c < ix.classes; ++c) {
    if (!present[c] || den[c] == T(0)) continue;
    ++n_present;
    loss -= T(2) * std::abs(num[c]) / den[c];
  }
  if (n_present) loss /= T(n_present);

  auto pn = probs.node();
  std::vector<T> y(yd.begin(), yd.end());
  return Tensor<T>::make_op(
      {}, {loss}, {probs},
      [pn, y = std::move(y), num, den, sp, present, n_present, squared_sums,
       ix](typename Tensor<T>::Node& self) {
        if (!n_present) return;
        T g = self.grad[0] / T(n_present);
        auto& gp = pn->grad_buf();
        for (std::size_t i = 0; i < y.size(); ++i) {
          std::size_t c = ix.class_of(i);
          if (!present[c] || den[c] == T(0)) continue;
          T sgn = num[c] < T(0) ? T(-1) : T(1);
          T dnum = T(2) * sgn * y[i];
          T dden = squared_sums ? T(2) * sp[c] : T(2) * pn->data[i];
          T d = (dnum * den[c] - T(2) * std::abs(num[c]) * dden) / (den[c] * den[c]);
          gp[i] -= g * d;
        }
      });
}

// Per-class weights that ramp linearly from a uniform start to the target
// over ramp_epochs, then stay at the target.
template <class T>
struct WeightSchedule {
  std::vector<T> start;
  std::vector<T> target;
  std::size_t ramp_epochs = 20;
};

template <class T>
std::vector<T> scheduled_weights(const WeightSchedule<T>& s, std::size_t epoch) {
  if (s.start.size() != s.target.size())
    throw ConfigError("weight schedule: start/target size mismatch");
  T a = s.ramp_epochs == 0 ? T(1)
                           : std::min(T(1), T(epoch) / T(s.ramp_epochs));
  std::vector<T> w(s.start.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = s.start[i] + a * (s.target[i] - s.start[i]);
  return w;
}

template <class T>
struct LossConfig {
  LossCombo combo = LossCombo::CEPlusSoftIoU;
  std::vector<T> branch_weights;          // default 1.0 per branch
  std::optional<WeightSchedule<T>> schedule;  // semantic-branch CE weights
  bool dice_squared_sums = false;
};

// Sum of the selected component losses over all branches, each scaled by its
// branch weight. Branch 0 is the semantic branch and is the only one that
// receives scheduled class weights; zero-weight branches are skipped
// entirely so their parameters receive no gradient.
template <class T>
Tensor<T> total_loss(const LossConfig<T>& cfg, const std::vector<Tensor<T>>& outputs,
                     const std::vector<Tensor<T>>& targets, std::size_t epoch) {
  if (outputs.size() != targets.size())
    throw ShapeError("total_loss: outputs/targets branch count mismatch");
  if (!cfg.branch_weights.empty() && cfg.branch_weights.size() != outputs.size())
    throw ShapeError("total_loss: branch weight count mismatch");

  std::vector<T> class_weights;
  if (cfg.schedule) class_weights = scheduled_weights(*cfg.schedule, epoch);

  Tensor<T> total;
  for (std::size_t b = 0; b < outputs.size(); ++b) {
    T bw = cfg.branch_weights.empty() ? T(1) : cfg.branch_weights[b];
    if (bw == T(0)) continue;
    const auto& w = b == 0 ? class_weights : std::vector<T>{};
    Tensor<T> branch;
    switch (cfg.combo) {
      case LossCombo::CE:
        branch = cross_entropy(outputs[b], targets[b], 1, w);
        break;
      case LossCombo::SoftIoU:
        branch = soft_iou_loss(outputs[b], targets[b], 1);
        break;
      case LossCombo::SoftDice:
        branch = soft_dice_loss(outputs[b], targets[b], 1, cfg.dice_squared_sums);
        break;
      case LossCombo::CEPlusSoftIoU:
        branch = add(cross_entropy(outputs[b], targets[b], 1, w),
                     soft_iou_loss(outputs[b], targets[b], 1));
        break;
      case LossCombo::CEPlusSoftDice:
        branch = add(cross_entropy(outputs[b], targets[b], 1, w),
                     soft_dice_loss(outputs[b], targets[b], 1, cfg.dice_squared_sums));
        break;
    }
    if (bw != T(1)) branch = scalar_mul(branch, bw);
    total = total.defined() ? add(total, branch) : branch;
  }
  return total.defined() ? total : Tensor<T>::scalar(T(0));
}

inline LossCombo parse_loss_combo(const std::string& s) {
  if (s == "ce") return LossCombo::CE;
  if (s == "soft_iou") return LossCombo::SoftIoU;
  if (s == "soft_dice") return LossCombo::SoftDice;
  if (s == "ce+soft_iou") return LossCombo::CEPlusSoftIoU;
  if (s == "ce+soft_dice") return LossCombo::CEPlusSoftDice;
  throw ConfigError("unknown loss combo: " + s);
}

inline const char* loss_combo_name(LossCombo c) {
  switch (c) {
    case LossCombo::CE: return "ce";
    case LossCombo::SoftIoU: return "soft_iou";
    case LossCombo::SoftDice: return "soft_dice";
    case LossCombo::CEPlusSoftIoU: return "ce+soft_iou";
    case LossCombo::CEPlusSoftDice: return "ce+soft_dice";
  }
  return "?";
}

}  // namespace skyseg

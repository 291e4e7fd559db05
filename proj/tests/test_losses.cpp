#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "skyseg/losses.hpp"
#include "skyseg/verify.hpp"

using namespace skyseg;

TEST_CASE("cross entropy hand values") {
  // one pixel, two classes, true class at probability 0.5
  auto p = TensorD::from_data({1, 2, 1}, {0.5, 0.5});
  auto y = TensorD::from_data({1, 2, 1}, {1.0, 0.0});
  CHECK(cross_entropy(p, y).item() == doctest::Approx(-0.5 * std::log(0.5)).epsilon(1e-12));

  // perfect one-hot prediction scores zero
  auto exact = TensorD::from_data({1, 2, 2}, {1.0, 0.0, 0.0, 1.0});
  CHECK(cross_entropy(exact, exact).item() == 0.0);
}

TEST_CASE("cross entropy has no pixel-count normalization") {
  auto p1 = TensorD::from_data({1, 2, 1}, {0.7, 0.3});
  auto y1 = TensorD::from_data({1, 2, 1}, {1.0, 0.0});
  auto p2 = TensorD::from_data({1, 2, 2}, {0.7, 0.7, 0.3, 0.3});
  auto y2 = TensorD::from_data({1, 2, 2}, {1.0, 1.0, 0.0, 0.0});
  CHECK(cross_entropy(p2, y2).item() ==
        doctest::Approx(2.0 * cross_entropy(p1, y1).item()).epsilon(1e-12));
}

TEST_CASE("cross entropy class weights scale per-class terms") {
  auto p = TensorD::from_data({1, 2, 2}, {0.6, 0.2, 0.4, 0.8});
  auto y = TensorD::from_data({1, 2, 2}, {1.0, 0.0, 0.0, 1.0});
  double base = -(std::log(0.6) + std::log(0.8)) / 2.0;
  CHECK(cross_entropy(p, y).item() == doctest::Approx(base).epsilon(1e-12));
  double weighted = -(3.0 * std::log(0.6) + 0.5 * std::log(0.8)) / 2.0;
  CHECK(cross_entropy(p, y, 1, {3.0, 0.5}).item() == doctest::Approx(weighted).epsilon(1e-12));
  CHECK_THROWS_AS(cross_entropy(p, y, 1, {1.0}), ShapeError);
}

TEST_CASE("soft iou hand values") {
  auto p = TensorD::from_data({1, 1, 2}, {0.5, 0.5});
  auto y = TensorD::from_data({1, 1, 2}, {1.0, 0.0});
  CHECK(soft_iou_loss(p, y).item() == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));

  auto exact = TensorD::from_data({1, 2, 2}, {1.0, 0.0, 0.0, 1.0});
  CHECK(soft_iou_loss(exact, exact).item() == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("soft dice hand values and denominator variants") {
  auto p = TensorD::from_data({1, 1, 2}, {0.5, 0.5});
  auto y = TensorD::from_data({1, 1, 2}, {1.0, 0.0});
  // sum of squares: 2*0.5 / (1 + 0.25 + 0.25)
  CHECK(soft_dice_loss(p, y).item() == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  // squared sums: 2*0.5 / (1 + 1)
  CHECK(soft_dice_loss(p, y, 1, true).item() == doctest::Approx(-0.5).epsilon(1e-12));

  auto exact = TensorD::from_data({1, 2, 2}, {1.0, 0.0, 0.0, 1.0});
  CHECK(soft_dice_loss(exact, exact).item() == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("absent classes are excluded from the overlap averages") {
  // class 1 never appears in the target; prediction mass there must not
  // drag a perfect score away from -1 via an empty-class ratio
  auto y = TensorD::from_data({1, 3, 2}, {1.0, 0.0, 0.0, 0.0, 0.0, 1.0});
  CHECK(soft_iou_loss(y, y).item() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(soft_dice_loss(y, y).item() == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("losses are invariant under pixel permutation") {
  auto p = TensorD::from_data({1, 2, 3}, {0.6, 0.3, 0.9, 0.4, 0.7, 0.1});
  auto y = TensorD::from_data({1, 2, 3}, {1.0, 0.0, 1.0, 0.0, 1.0, 0.0});
  // swap pixels 0 and 2
  auto pp = TensorD::from_data({1, 2, 3}, {0.9, 0.3, 0.6, 0.1, 0.7, 0.4});
  auto yp = TensorD::from_data({1, 2, 3}, {1.0, 0.0, 1.0, 0.0, 1.0, 0.0});
  CHECK(cross_entropy(p, y).item() == doctest::Approx(cross_entropy(pp, yp).item()));
  CHECK(soft_iou_loss(p, y).item() == doctest::Approx(soft_iou_loss(pp, yp).item()));
  CHECK(soft_dice_loss(p, y).item() == doctest::Approx(soft_dice_loss(pp, yp).item()));
}

TEST_CASE("loss gradients pass finite-difference checks through softmax") {
  auto logits = TensorD::uniform({1, 3, 8}, 31, -1.5, 1.5);
  auto y = TensorD::zeros({1, 3, 8});
  for (std::size_t n = 0; n < 8; ++n) y.mutable_data()[(n * 7 % 3) * 8 + n] = 1.0;
  auto ce = [&](const TensorD& t) { return cross_entropy(softmax(t, 1), y); };
  auto iou = [&](const TensorD& t) { return soft_iou_loss(softmax(t, 1), y); };
  auto dice = [&](const TensorD& t) { return soft_dice_loss(softmax(t, 1), y); };
  CHECK(gradcheck_max_rel_err(ce, logits) < 1e-6);
  CHECK(gradcheck_max_rel_err(iou, logits) < 1e-6);
  CHECK(gradcheck_max_rel_err(dice, logits) < 1e-6);
}

TEST_CASE("weight schedule ramps linearly then holds") {
  WeightSchedule<double> s{{1.0, 1.0}, {3.0, 0.5}, 20};
  auto w0 = scheduled_weights(s, 0);
  CHECK(w0[0] == 1.0);
  CHECK(w0[1] == 1.0);
  auto w10 = scheduled_weights(s, 10);
  CHECK(w10[0] == doctest::Approx(2.0));
  CHECK(w10[1] == doctest::Approx(0.75));
  auto w20 = scheduled_weights(s, 20);
  CHECK(w20[0] == doctest::Approx(3.0));
  auto w50 = scheduled_weights(s, 50);
  CHECK(w50[0] == doctest::Approx(3.0));
  CHECK(w50[1] == doctest::Approx(0.5));
}

TEST_CASE("total loss is the weighted sum of per-branch components") {
  auto p0 = TensorD::uniform({1, 2, 4}, 41, 0.1, 0.9);
  auto p1 = TensorD::uniform({1, 2, 4}, 42, 0.1, 0.9);
  auto y0 = TensorD::from_data({1, 2, 4}, {1, 0, 1, 0, 0, 1, 0, 1});
  auto y1 = TensorD::from_data({1, 2, 4}, {0, 1, 1, 0, 1, 0, 0, 1});

  LossConfig<double> cfg;
  cfg.combo = LossCombo::CEPlusSoftIoU;
  cfg.branch_weights = {1.0, 0.5};
  double expect = cross_entropy(p0, y0).item() + soft_iou_loss(p0, y0).item() +
                  0.5 * (cross_entropy(p1, y1).item() + soft_iou_loss(p1, y1).item());
  CHECK(total_loss(cfg, {p0, p1}, {y0, y1}, 0).item() == expect);
}

TEST_CASE("zero-weight branches contribute nothing, not even gradient") {
  auto p0 = TensorD::uniform({1, 2, 4}, 43, 0.1, 0.9);
  auto p1 = TensorD::uniform({1, 2, 4}, 44, 0.1, 0.9);
  p0.set_requires_grad(true);
  p1.set_requires_grad(true);
  auto y = TensorD::from_data({1, 2, 4}, {1, 0, 1, 0, 0, 1, 0, 1});

  LossConfig<double> cfg;
  cfg.branch_weights = {1.0, 0.0};
  auto t = total_loss(cfg, {p0, p1}, {y, y}, 0);
  CHECK(t.item() == cross_entropy(p0, y).item() + soft_iou_loss(p0, y).item());
  t.backward();
  bool p0_moved = false;
  for (std::size_t i = 0; i < 8; ++i) {
    p0_moved = p0_moved || p0.grad_at(i) != 0.0;
    CHECK(p1.grad_at(i) == 0.0);
  }
  CHECK(p0_moved);
}

TEST_CASE("scheduled class weights apply to the semantic branch only") {
  auto p0 = TensorD::uniform({1, 2, 4}, 45, 0.1, 0.9);
  auto p1 = TensorD::uniform({1, 2, 4}, 46, 0.1, 0.9);
  auto y = TensorD::from_data({1, 2, 4}, {1, 0, 1, 0, 0, 1, 0, 1});

  LossConfig<double> cfg;
  cfg.combo = LossCombo::CE;
  cfg.schedule = WeightSchedule<double>{{1.0, 1.0}, {4.0, 0.25}, 10};
  auto w = scheduled_weights(*cfg.schedule, 10);
  double expect = cross_entropy(p0, y, 1, w).item() + cross_entropy(p1, y).item();
  CHECK(total_loss(cfg, {p0, p1}, {y, y}, 10).item() == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("loss combo names round trip") {
  for (auto c : {LossCombo::CE, LossCombo::SoftIoU, LossCombo::SoftDice,
                 LossCombo::CEPlusSoftIoU, LossCombo::CEPlusSoftDice})
    CHECK(parse_loss_combo(loss_combo_name(c)) == c);
  CHECK_THROWS_AS(parse_loss_combo("nope"), ConfigError);
}

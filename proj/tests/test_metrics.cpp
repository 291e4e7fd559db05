#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "skyseg/errors.hpp"
#include "skyseg/metrics.hpp"

using namespace skyseg;

TEST_CASE("hand case: TP 3, FP 1, FN 2 gives IoU 0.5") {
  ConfusionMatrix cm(2);
  cm.add(0, 0, 3);
  cm.add(1, 0, 1);
  cm.add(0, 1, 2);
  CHECK(cm.true_positives(0) == 3);
  CHECK(cm.false_positives(0) == 1);
  CHECK(cm.false_negatives(0) == 2);
  CHECK(cm.iou(0).value() == doctest::Approx(0.5));
}

TEST_CASE("hand case: 2-class matrix [[3,1],[2,4]]") {
  ConfusionMatrix cm(2);
  cm.add(0, 0, 3);
  cm.add(0, 1, 1);
  cm.add(1, 0, 2);
  cm.add(1, 1, 4);
  CHECK(cm.total() == 10);
  CHECK(cm.pixel_accuracy() == doctest::Approx(0.7));
  CHECK(cm.recall(0).value() == doctest::Approx(0.75));
  CHECK(cm.recall(1).value() == doctest::Approx(2.0 / 3.0));
  CHECK(cm.mean_recall() == doctest::Approx((0.75 + 2.0 / 3.0) / 2.0));
  CHECK(cm.iou(0).value() == doctest::Approx(3.0 / 6.0));
  CHECK(cm.iou(1).value() == doctest::Approx(4.0 / 7.0));
  CHECK(cm.fw_iou() == doctest::Approx(0.4 * 0.5 + 0.6 * 4.0 / 7.0));
}

TEST_CASE("perfect prediction scores 1 everywhere") {
  ConfusionMatrix cm(3);
  cm.add(0, 0, 5);
  cm.add(1, 1, 7);
  cm.add(2, 2, 2);
  CHECK(cm.mean_iou() == 1.0);
  CHECK(cm.fw_iou() == doctest::Approx(1.0));
  CHECK(cm.pixel_accuracy() == 1.0);
  CHECK(cm.mean_precision() == 1.0);
  CHECK(cm.mean_recall() == 1.0);
}

TEST_CASE("classes absent from both gt and prediction are excluded") {
  ConfusionMatrix cm(4);
  cm.add(0, 0, 4);
  cm.add(1, 0, 4);
  CHECK_FALSE(cm.iou(2).has_value());
  CHECK_FALSE(cm.iou(3).has_value());
  CHECK_FALSE(cm.recall(2).has_value());
  // mean over {iou0=0.5, iou1=0} only
  CHECK(cm.mean_iou() == doctest::Approx(0.25));
}

TEST_CASE("accumulate counts pixels and honors the ignore label") {
  std::vector<std::uint8_t> gt{0, 0, 1, 1, 2, 2};
  std::vector<std::uint8_t> pred{0, 1, 1, 1, 0, 2};
  ConfusionMatrix cm(3);
  cm.accumulate(gt, pred);
  CHECK(cm.total() == 6);
  CHECK(cm.at(0, 1) == 1);
  CHECK(cm.at(2, 0) == 1);

  ConfusionMatrix ig(3);
  ig.accumulate(gt, pred, std::uint8_t{2});
  CHECK(ig.total() == 4);
  CHECK(ig.at(2, 0) == 0);

  std::vector<std::uint8_t> bad{0, 0, 9, 1, 2, 2};
  ConfusionMatrix b(3);
  CHECK_THROWS_AS(b.accumulate(bad, pred), ShapeError);
  CHECK_THROWS_AS(b.accumulate(gt, std::span<const std::uint8_t>(pred.data(), 5)), ShapeError);
}

TEST_CASE("merge equals accumulating everything at once") {
  std::vector<std::uint8_t> gt{0, 1, 2, 1, 0, 2, 1, 0};
  std::vector<std::uint8_t> pred{0, 1, 1, 2, 0, 2, 1, 1};
  ConfusionMatrix whole(3), a(3), b(3);
  whole.accumulate(gt, pred);
  a.accumulate(std::span(gt).first(4), std::span(pred).first(4));
  b.accumulate(std::span(gt).subspan(4), std::span(pred).subspan(4));
  a.merge(b);
  for (std::size_t g = 0; g < 3; ++g)
    for (std::size_t p = 0; p < 3; ++p) CHECK(a.at(g, p) == whole.at(g, p));
  CHECK_THROWS_AS(a.merge(ConfusionMatrix(2)), ShapeError);
}

TEST_CASE("report emits one row per class plus a summary row") {
  ConfusionMatrix cm(2);
  cm.add(0, 0, 3);
  cm.add(0, 1, 1);
  cm.add(1, 0, 2);
  cm.add(1, 1, 4);
  auto csv = cm.report({"road", "building"});

  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == "class,tp,fp,fn,iou,precision,recall");
  std::getline(is, line);
  CHECK(line.rfind("road,3,2,1,", 0) == 0);
  std::getline(is, line);
  CHECK(line.rfind("building,4,1,2,", 0) == 0);
  std::getline(is, line);
  CHECK(line.rfind("summary,10,,,", 0) == 0);
  CHECK_FALSE(std::getline(is, line));

  CHECK_THROWS_AS(cm.report({"road"}), ShapeError);
}

TEST_CASE("empty cells for undefined per-class metrics") {
  ConfusionMatrix cm(2);
  cm.add(0, 0, 2);
  auto csv = cm.report({"a", "b"});
  // class b has no pixels in gt or prediction: metric columns stay empty
  CHECK(csv.find("b,0,0,0,,,\n") != std::string::npos);
}

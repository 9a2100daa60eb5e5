#include <cstdint>
#include <limits>
#include <vector>

#include "doctest.h"
#include "mapeval/types.hpp"
#include "test_util.hpp"

using namespace mapeval;
using mapeval::testing::det_image;
using mapeval::testing::gt_image;

TEST_CASE("box dimensions use the inclusive pixel convention") {
  const Box b{0, 0, 9, 9};
  CHECK(b.width() == 10.0);
  CHECK(b.height() == 10.0);
  CHECK(b.area() == 100.0);

  const Box pixel{3, 7, 3, 7};  // a single pixel still has area 1
  CHECK(pixel.width() == 1.0);
  CHECK(pixel.area() == 1.0);
}

TEST_CASE("ground-truth record with consistent lists is accepted") {
  const auto rec = gt_image("a", {{0, 0, 9, 9}, {5, 5, 6, 6}}, {0, 1}, {false, true});
  CHECK_NOTHROW(validate_image_record(rec, 2));
  CHECK(rec.size() == 2);
}

TEST_CASE("degenerate boxes are rejected with the violated bound") {
  const auto flipped_x = gt_image("a", {{5, 5, 4, 9}}, {0});
  CHECK_THROWS_WITH_AS(validate_image_record(flipped_x), doctest::Contains("xmax < xmin"),
                       ValidationError);

  const auto flipped_y = gt_image("a", {{5, 5, 9, 4}}, {0});
  CHECK_THROWS_WITH_AS(validate_image_record(flipped_y), doctest::Contains("ymax < ymin"),
                       ValidationError);

  const double inf = std::numeric_limits<double>::infinity();
  const auto unbounded = gt_image("a", {{0, 0, inf, 9}}, {0});
  CHECK_THROWS_WITH_AS(validate_image_record(unbounded),
                       doctest::Contains("non-finite coordinate"), ValidationError);
}

TEST_CASE("zero-extent boxes are valid (xmax == xmin covers one pixel)") {
  CHECK_NOTHROW(validate_image_record(gt_image("a", {{2, 2, 2, 2}}, {0})));
}

TEST_CASE("detection scores outside [0, 1] are rejected") {
  const auto too_big = det_image("a", {{0, 0, 9, 9}}, {0}, {1.3});
  CHECK_THROWS_WITH_AS(validate_image_record(too_big),
                       doctest::Contains("score out of range"), ValidationError);

  const auto negative = det_image("a", {{0, 0, 9, 9}}, {0}, {-0.1});
  CHECK_THROWS_AS(validate_image_record(negative), ValidationError);

  const auto nan_score =
      det_image("a", {{0, 0, 9, 9}}, {0}, {std::numeric_limits<double>::quiet_NaN()});
  CHECK_THROWS_AS(validate_image_record(nan_score), ValidationError);

  CHECK_NOTHROW(validate_image_record(det_image("a", {{0, 0, 9, 9}}, {0}, {0.0})));
  CHECK_NOTHROW(validate_image_record(det_image("a", {{0, 0, 9, 9}}, {0}, {1.0})));
}

TEST_CASE("mismatched parallel list lengths are rejected") {
  ImageGroundTruth gt;
  gt.image_id = "a";
  gt.boxes = {{0, 0, 9, 9}};
  gt.labels = {0, 1};  // one box, two labels
  gt.difficult = {false};
  CHECK_THROWS_WITH_AS(validate_image_record(gt),
                       doctest::Contains("mismatched list lengths"), ValidationError);

  ImageDetections det;
  det.image_id = "a";
  det.boxes = {{0, 0, 9, 9}};
  det.labels = {0};
  det.scores = {0.5, 0.25};
  det.discarded = {false};
  CHECK_THROWS_AS(validate_image_record(det), ValidationError);
}

TEST_CASE("labels must lie in [0, class_count) once the count is known") {
  const auto rec = gt_image("a", {{0, 0, 9, 9}}, {3});
  CHECK_NOTHROW(validate_image_record(rec));  // count unknown: only >= 0 enforced
  CHECK_THROWS_WITH_AS(validate_image_record(rec, 3),
                       doctest::Contains("label out of range"), ValidationError);
  CHECK_NOTHROW(validate_image_record(rec, 4));

  const auto negative = gt_image("a", {{0, 0, 9, 9}}, {-1});
  CHECK_THROWS_AS(validate_image_record(negative), ValidationError);
}

TEST_CASE("pad label lies outside every valid class range") {
  CHECK(kPadLabel < 0);
}

TEST_CASE("validation errors can carry a 1-based input line") {
  const ValidationError with_line("bad record", 7);
  CHECK(with_line.line() == 7);
  CHECK_THROWS_WITH_AS(throw ValidationError("bad record", 7),
                       "bad record (line 7)", ValidationError);

  const ValidationError unbound("bad record");
  CHECK(unbound.line() == -1);
  CHECK(std::string(unbound.what()) == "bad record");
}

TEST_CASE("ap method names round-trip and reject unknowns") {
  for (const auto method : {ApMethod::kTrapezoidEveryPoint, ApMethod::kStepEveryPoint,
                            ApMethod::kRecallLevels}) {
    CHECK(ap_method_from_string(to_string(method)) == method);
  }
  CHECK(to_string(ApMethod::kTrapezoidEveryPoint) == "trapezoid");
  CHECK(to_string(ApMethod::kStepEveryPoint) == "step");
  CHECK(to_string(ApMethod::kRecallLevels) == "recall-levels");
  CHECK_THROWS_AS(ap_method_from_string("area"), ConfigError);
}

TEST_CASE("default recall levels are the 11-point grid") {
  const auto levels = default_recall_levels();
  REQUIRE(levels.size() == 11);
  CHECK(levels.front() == 0.0);
  CHECK(levels.back() == 1.0);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    CHECK(levels[i] == static_cast<double>(i) / 10.0);  // exact decimals
  }
}

TEST_CASE("config validation rejects each bad field") {
  EvalConfig good;
  good.class_count = 2;
  CHECK_NOTHROW(good.validate());

  EvalConfig c = good;
  c.class_count = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = good;
  c.iou_thresholds.clear();
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("IoU threshold"), ConfigError);

  c = good;
  c.iou_thresholds = {0.0};  // thresholds are strict lower bounds, 0 excluded
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.iou_thresholds = {1.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.iou_thresholds = {0.5, 0.95};
  CHECK_NOTHROW(c.validate());

  c = good;
  c.ap_method = ApMethod::kRecallLevels;  // level checks apply to this method
  c.recall_levels.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.recall_levels = {0.0, 1.1};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.recall_levels = {0.5, 0.25};
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("sorted ascending"), ConfigError);
  c.recall_levels = default_recall_levels();
  CHECK_NOTHROW(c.validate());

  c = good;
  c.epsilon = 0.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("epsilon"), ConfigError);

  c = good;
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = good;
  c.max_dets_per_image = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("category codes are fixed") {
  CHECK(kCategoryIgnored == 0);
  CHECK(kCategoryFalsePositive == 1);
  CHECK(kCategoryTruePositive == 2);
}

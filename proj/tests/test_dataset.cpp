#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mapeval/dataset.hpp"
#include "test_util.hpp"

using namespace mapeval;
using mapeval::testing::det_image;
using mapeval::testing::gt_image;
using mapeval::testing::micro_dataset;

namespace {

std::vector<ImageGroundTruth> parse_gt(const std::string& text) {
  std::istringstream in(text);
  return parse_ground_truth(in);
}

std::vector<ImageDetections> parse_det(const std::string& text) {
  std::istringstream in(text);
  return parse_detections(in);
}

}  // namespace

TEST_CASE("a ground-truth line maps straight onto the record") {
  const auto records =
      parse_gt(R"({"image_id":"a","boxes":[[0,0,9,9]],"labels":[0],"difficult":[false]})"
               "\n");
  REQUIRE(records.size() == 1);
  CHECK(records[0].image_id == "a");
  REQUIRE(records[0].boxes.size() == 1);
  CHECK(records[0].boxes[0] == Box{0, 0, 9, 9});
  CHECK(records[0].labels == std::vector<std::int32_t>{0});
  CHECK(records[0].difficult == std::vector<bool>{false});
}

TEST_CASE("empty input gives an empty record list") {
  CHECK(parse_gt("").empty());
  CHECK(parse_det("").empty());
  CHECK(parse_gt("\n\n").empty());  // blank lines are skipped
}

TEST_CASE("length mismatches are reported with the offending line") {
  const std::string text =
      R"({"image_id":"a","boxes":[[0,0,9,9]],"labels":[0],"difficult":[false]})"
      "\n"
      R"({"image_id":"b","boxes":[[0,0,9,9]],"labels":[0,1],"difficult":[false]})"
      "\n";
  CHECK_THROWS_WITH_AS(parse_gt(text), doctest::Contains("(line 2)"), ValidationError);
  try {
    parse_gt(text);
  } catch (const ValidationError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("malformed lines are reported with their line number") {
  CHECK_THROWS_WITH_AS(parse_gt("not a record\n"), doctest::Contains("malformed line"),
                       ValidationError);
  const std::string missing_key = R"({"image_id":"a","boxes":[[0,0,9,9]]})"
                                  "\n";
  CHECK_THROWS_AS(parse_gt(missing_key), ValidationError);
  const std::string bad_box = R"({"image_id":"a","boxes":[[0,0,9]],"labels":[0],"difficult":[false]})"
                              "\n";
  CHECK_THROWS_WITH_AS(parse_gt(bad_box), doctest::Contains("4-element"), ValidationError);
}

TEST_CASE("duplicate image ids within one file are rejected") {
  const std::string text =
      R"({"image_id":"a","boxes":[],"labels":[],"difficult":[]})"
      "\n"
      R"({"image_id":"a","boxes":[],"labels":[],"difficult":[]})"
      "\n";
  CHECK_THROWS_WITH_AS(parse_gt(text), doctest::Contains("duplicate image_id 'a'"),
                       ValidationError);
}

TEST_CASE("the discarded field defaults to all-false") {
  const auto records = parse_det(
      R"({"image_id":"a","boxes":[[0,0,1,1],[2,2,3,3],[4,4,5,5]],"labels":[0,0,0],"scores":[0.9,0.8,0.7]})"
      "\n");
  REQUIRE(records.size() == 1);
  CHECK(records[0].discarded == std::vector<bool>{false, false, false});

  const auto flagged = parse_det(
      R"({"image_id":"a","boxes":[[0,0,1,1]],"labels":[0],"scores":[0.9],"discarded":[true]})"
      "\n");
  CHECK(flagged[0].discarded == std::vector<bool>{true});
}

TEST_CASE("serialization round-trips through the parser") {
  const Dataset data = micro_dataset();

  std::ostringstream gt_out, det_out;
  serialize_ground_truth(data.ground_truth, gt_out);
  serialize_detections(data.detections, det_out);

  CHECK(parse_gt(gt_out.str()) == data.ground_truth);
  CHECK(parse_det(det_out.str()) == data.detections);
}

TEST_CASE("dataset assembly attaches detections by image id") {
  auto gt = std::vector<ImageGroundTruth>{
      gt_image("x", {{0, 0, 9, 9}}, {0}),
      gt_image("y", {{0, 0, 9, 9}}, {1}),
  };
  // Detection records arrive in the opposite order; index follows ground truth.
  auto det = std::vector<ImageDetections>{
      det_image("y", {{0, 0, 9, 9}}, {1}, {0.5}),
      det_image("x", {{0, 0, 9, 9}}, {0}, {0.9}),
  };
  const Dataset data = Dataset::build(std::move(gt), std::move(det));
  REQUIRE(data.image_count() == 2);
  CHECK(data.detections[0].image_id == "x");
  CHECK(data.detections[0].scores == std::vector<double>{0.9});
  CHECK(data.detections[1].image_id == "y");
}

TEST_CASE("images without a detection record get an empty one") {
  const Dataset data = Dataset::build({gt_image("solo", {{0, 0, 9, 9}}, {0})}, {});
  REQUIRE(data.image_count() == 1);
  CHECK(data.detections[0].image_id == "solo");
  CHECK(data.detections[0].size() == 0);
}

TEST_CASE("detections naming an unknown image are rejected") {
  CHECK_THROWS_WITH_AS(
      Dataset::build({gt_image("a", {}, {})},
                     {det_image("ghost", {{0, 0, 1, 1}}, {0}, {0.5})}),
      doctest::Contains("detections for unknown image 'ghost'"), ValidationError);
}

TEST_CASE("class count inference is one past the highest label") {
  const Dataset data = micro_dataset();
  CHECK(data.inferred_class_count() == 2);

  const Dataset unlabeled = Dataset::build({gt_image("a", {}, {})}, {});
  CHECK(unlabeled.inferred_class_count() == 0);
}

TEST_CASE("easy ground-truth counts skip difficult boxes") {
  auto gt = std::vector<ImageGroundTruth>{
      gt_image("a", {{0, 0, 1, 1}, {2, 2, 3, 3}, {4, 4, 5, 5}}, {0, 0, 0},
               {false, true, false}),
  };
  const Dataset data = Dataset::build(std::move(gt), {});
  CHECK(count_easy_gt(data, 2) == std::vector<std::int64_t>{2, 0});
  CHECK(count_easy_gt(micro_dataset(), 2) == std::vector<std::int64_t>{1, 1});
}

TEST_CASE("ground-truth padding fills dummy slots with masked sentinels") {
  const std::vector<ImageGroundTruth> images = {
      gt_image("a", {{1, 2, 3, 4}}, {1}, {false}),
      gt_image("b", {{0, 0, 1, 1}, {2, 2, 3, 3}, {4, 4, 5, 5}}, {0, 1, 0},
               {false, true, false}),
  };
  const PaddedGtBatch batch = pad_gt_batch(images, 3);
  CHECK(batch.image_count == 2);
  CHECK(batch.gt_slots == 3);

  // Real slots copy their fields; the difficult flag lands in the mask.
  CHECK(batch.box_at(0, 0)[0] == 1.0);
  CHECK(batch.box_at(0, 0)[3] == 4.0);
  CHECK(batch.labels[batch.slot(0, 0)] == 1);
  CHECK(batch.ignore_mask == std::vector<std::uint8_t>{0, 1, 1, 0, 1, 0});

  // Padded slots: zero box, sentinel label, masked.
  for (int jh = 1; jh < 3; ++jh) {
    for (int c = 0; c < 4; ++c) {
      CHECK(batch.box_at(0, jh)[c] == 0.0);
    }
    CHECK(batch.labels[batch.slot(0, jh)] == kPadLabel);
  }
}

TEST_CASE("an image with no ground truth pads to a fully masked row") {
  const PaddedGtBatch batch = pad_gt_batch({gt_image("empty", {}, {})}, 2);
  CHECK(batch.ignore_mask == std::vector<std::uint8_t>{1, 1});
  CHECK(batch.labels == std::vector<std::int32_t>{kPadLabel, kPadLabel});
}

TEST_CASE("a full row with no difficult boxes is entirely unmasked") {
  const PaddedGtBatch batch = pad_gt_batch(
      {gt_image("a", {{0, 0, 1, 1}, {2, 2, 3, 3}}, {0, 1}, {false, false})}, 2);
  CHECK(batch.ignore_mask == std::vector<std::uint8_t>{0, 0});
}

TEST_CASE("too many ground-truth boxes for the slot count is an error") {
  CHECK_THROWS_WITH_AS(
      pad_gt_batch({gt_image("a", {{0, 0, 1, 1}, {2, 2, 3, 3}}, {0, 0})}, 1),
      doctest::Contains("more than 1 slots"), ValidationError);
  CHECK_THROWS_AS(pad_gt_batch({}, 3), std::invalid_argument);
}

TEST_CASE("detection batches mask padded and discarded slots alike") {
  const std::vector<ImageDetections> images = {
      det_image("a", {{0, 0, 1, 1}, {2, 2, 3, 3}}, {0, 1}, {0.9, 0.8}, {false, true}),
  };
  const DetBatch batch = build_det_batch(images, 3);
  CHECK(batch.det_slots == 3);
  CHECK(batch.discard_mask == std::vector<std::uint8_t>{0, 1, 1});
  CHECK(batch.scores == std::vector<double>{0.9, 0.8, 0.0});
  CHECK(batch.labels == std::vector<std::int32_t>{0, 1, kPadLabel});

  const DetBatch exact = build_det_batch(
      {det_image("a", {{0, 0, 1, 1}, {2, 2, 3, 3}}, {0, 1}, {0.9, 0.8})}, 2);
  CHECK(exact.discard_mask == std::vector<std::uint8_t>{0, 0});

  const DetBatch empty = build_det_batch({det_image("a", {}, {}, {})}, 2);
  CHECK(empty.discard_mask == std::vector<std::uint8_t>{1, 1});

  CHECK_THROWS_AS(build_det_batch(images, 1), ValidationError);
}

TEST_CASE("batch ranges tile the image list with a short tail") {
  const auto ranges = batch_ranges(5, 2);
  REQUIRE(ranges.size() == 3);
  CHECK(ranges[0].begin == 0);
  CHECK(ranges[0].end == 2);
  CHECK(ranges[1].begin == 2);
  CHECK(ranges[1].end == 4);
  CHECK(ranges[2].begin == 4);
  CHECK(ranges[2].end == 5);
  CHECK(ranges[2].size() == 1);

  CHECK(batch_ranges(1, 8).size() == 1);
  CHECK(batch_ranges(0, 4).empty());
}

TEST_CASE("make_batch sizes slots from the batch unless the config pins them") {
  const Dataset data = micro_dataset();
  EvalConfig config;
  config.class_count = 2;

  const BatchPair batch = make_batch(data, {0, 2}, config);
  CHECK(batch.det.det_slots == 3);  // image A holds the batch maximum
  CHECK(batch.gt.gt_slots == 2);
  CHECK(batch.det.first_image == 0);
  CHECK(batch.gt.first_image == 0);

  EvalConfig pinned = config;
  pinned.max_dets_per_image = 5;
  pinned.max_gts_per_image = 4;
  const BatchPair wide = make_batch(data, {1, 2}, pinned);
  CHECK(wide.det.det_slots == 5);
  CHECK(wide.gt.gt_slots == 4);
  CHECK(wide.det.first_image == 1);

  CHECK_THROWS_AS(make_batch(data, {1, 1}, config), std::invalid_argument);
}

TEST_CASE("the batch iterator walks every range in order") {
  const Dataset data = micro_dataset();
  EvalConfig config;
  config.class_count = 2;
  config.batch_size = 1;

  BatchIterator it(data, config);
  CHECK(it.batch_count() == 2);
  REQUIRE(!it.done());
  const BatchPair first = it.next();
  CHECK(first.det.first_image == 0);
  const BatchPair second = it.next();
  CHECK(second.det.first_image == 1);
  CHECK(it.done());
}

TEST_CASE("padded slots never carry a valid class label") {
  // (mask off) => label in range; (sentinel label) => mask on.
  const std::vector<ImageGroundTruth> images = {
      gt_image("a", {{0, 0, 1, 1}}, {1}, {true}),
      gt_image("b", {}, {}),
  };
  const PaddedGtBatch batch = pad_gt_batch(images, 2);
  for (int i = 0; i < batch.image_count; ++i) {
    for (int jh = 0; jh < batch.gt_slots; ++jh) {
      const std::size_t s = batch.slot(i, jh);
      if (!batch.ignore_mask[s]) {
        CHECK(batch.labels[s] >= 0);
      }
      if (batch.labels[s] == kPadLabel) {
        CHECK(batch.ignore_mask[s] == 1);
      }
    }
  }
}

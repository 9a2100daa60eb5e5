#pragma once

// Small builders shared across the unit-test files.

#include <algorithm>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "mapeval/accumulator.hpp"
#include "mapeval/dataset.hpp"
#include "mapeval/matcher.hpp"
#include "mapeval/reference.hpp"
#include "mapeval/types.hpp"

namespace mapeval::testing {

inline ImageGroundTruth gt_image(std::string id, std::vector<Box> boxes,
                                 std::vector<std::int32_t> labels,
                                 std::vector<bool> difficult = {}) {
  if (difficult.empty()) {
    difficult.assign(boxes.size(), false);
  }
  return ImageGroundTruth{std::move(id), std::move(boxes), std::move(labels),
                          std::move(difficult)};
}

inline ImageDetections det_image(std::string id, std::vector<Box> boxes,
                                 std::vector<std::int32_t> labels,
                                 std::vector<double> scores,
                                 std::vector<bool> discarded = {}) {
  if (discarded.empty()) {
    discarded.assign(boxes.size(), false);
  }
  return ImageDetections{std::move(id), std::move(boxes), std::move(labels),
                         std::move(scores), std::move(discarded)};
}

/// The two-image, two-class instance used as a worked example throughout the
/// test suite. Image A: one easy and one difficult class-0 box; image B: one
/// easy class-1 box. Four detections with known categories at t = 0.5:
/// A gets a TP (score .9), a duplicate FP (.8), and a wrong-image FP (.7);
/// B gets a TP (.95). Both classes end at precision [1, .5], recall [1, 1].
inline Dataset micro_dataset() {
  Dataset data;
  data.ground_truth = {
      gt_image("A", {{0, 0, 9, 9}, {20, 20, 29, 29}}, {0, 0}, {false, true}),
      gt_image("B", {{0, 0, 9, 9}}, {1}),
  };
  data.detections = {
      det_image("A", {{0, 0, 9, 9}, {1, 0, 10, 9}, {0, 0, 9, 9}}, {0, 0, 1},
                {0.9, 0.8, 0.7}),
      det_image("B", {{0, 0, 6, 9}}, {1}, {0.95}),
  };
  return data;
}

/// Runs the two-pass categorization over the all-pairs overlap grid.
inline CategoryMatrix cube_categories(const DetBatch& det, const PaddedGtBatch& gt,
                                      double threshold) {
  IouCube cube = pairwise_iou(det, gt);
  filter_iou(cube, det, gt);
  CategoryMatrix d = categorize_below(cube, det, threshold);
  categorize_above(d, cube, det, gt, threshold);
  return d;
}

/// The whole dataset as one fixed-shape batch pair.
inline BatchPair full_batch(const Dataset& data) {
  EvalConfig config;
  config.class_count = std::max(1, data.inferred_class_count());
  return make_batch(data, {0, data.image_count()}, config);
}

/// Categorizes the whole dataset in one batch and collects the result.
inline Accumulator accumulate_whole(const Dataset& data, double threshold) {
  const int k = std::max(1, data.inferred_class_count());
  Accumulator acc(count_easy_gt(data, k));
  const BatchPair batch = full_batch(data);
  extract(acc, cube_categories(batch.det, batch.gt, threshold), batch.det);
  return acc;
}

/// A small synthetic workload exercising every masking path: difficult and
/// discarded flags on, enough jitter for marginal overlaps, and extra
/// unmatched detections.
inline SyntheticSpec mixed_spec(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.image_count = 12;
  spec.class_count = 3;
  spec.max_gts_per_image = 5;
  spec.jitter = 6.0;
  spec.difficult_probability = 0.3;
  spec.discard_probability = 0.2;
  spec.false_detections_per_image = 2.0;
  return spec;
}

/// A crowded single-class workload on a small canvas: overlapping boxes with
/// a high difficult rate, the shape that makes the two matching orders pick
/// different boxes often enough to study.
inline SyntheticSpec dense_difficult_spec(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.image_count = 8;
  spec.class_count = 1;
  spec.max_gts_per_image = 8;
  spec.max_dets_per_gt = 3;
  spec.jitter = 8.0;
  spec.difficult_probability = 0.5;
  spec.discard_probability = 0.1;
  spec.false_detections_per_image = 1.0;
  spec.canvas_size = 80;
  return spec;
}

}  // namespace mapeval::testing

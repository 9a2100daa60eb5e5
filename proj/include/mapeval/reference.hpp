#pragma once

#include <cstdint>
#include <vector>

#include "mapeval/dataset.hpp"
#include "mapeval/types.hpp"

namespace mapeval {

/// How the reference evaluator picks the ground-truth box a detection is
/// matched against.
enum class MatchPolicy {
  /// Classic sequential rule: the argmax runs over every same-class ground
  /// truth, difficult ones included; a detection whose best overlap is a
  /// difficult box is ignored outright.
  kBestOverlapOverall,
  /// Mirror of the batched pipeline: difficult boxes are dropped before the
  /// argmax, so such a detection is matched against the best easy box
  /// instead. Used by the crosscheck to attribute category differences.
  kBestOverlapEasyOnly,
};

/// Output of the sequential reference path. Precision/recall vectors carry
/// one entry per same-class detection in score order (ignored detections
/// leave a repeated cumulative value, as the running sums do not move).
struct SequentialEvaluation {
  std::vector<std::vector<double>> precision;  // [class][pool position]
  std::vector<std::vector<double>> recall;
  std::vector<std::int64_t> tp_totals;         // per class
  std::vector<std::int64_t> fp_totals;
  std::vector<std::vector<std::uint8_t>> categories;  // [image][detection], codes 0/1/2
};

/// One detection at a time, per class in descending score order: gather the
/// same-image same-class ground truth, take the best IoU, and categorize
/// against the matched-flag store. Deliberately simple and serial; this is
/// the baseline the batched pipeline is tested and benchmarked against.
SequentialEvaluation sequential_evaluate(const Dataset& dataset, int class_count,
                                         double threshold, double epsilon,
                                         MatchPolicy policy = MatchPolicy::kBestOverlapOverall);

/// Recipe for a reproducible random dataset. All draws come from one seeded
/// generator, so equal specs produce byte-identical datasets.
struct SyntheticSpec {
  std::uint64_t seed = 1;
  int image_count = 10;
  int class_count = 3;
  int min_gts_per_image = 0;
  int max_gts_per_image = 6;
  int min_dets_per_gt = 1;   // jittered copies emitted per ground-truth box
  int max_dets_per_gt = 2;
  double jitter = 4.0;       // max per-coordinate perturbation, pixels
  double difficult_probability = 0.0;
  double discard_probability = 0.0;
  double false_detections_per_image = 1.0;  // expected unmatched extras per image
  int score_decimals = -1;   // quantize scores to this many decimals; -1 = off
  int canvas_size = 256;     // square canvas side, pixels

  void validate() const;  // throws ConfigError
};

Dataset generate(const SyntheticSpec& spec);

}  // namespace mapeval

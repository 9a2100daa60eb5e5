#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "mapeval/accumulator.hpp"
#include "mapeval/average_precision.hpp"
#include "mapeval/dataset.hpp"
#include "mapeval/reference.hpp"
#include "mapeval/types.hpp"

namespace mapeval {

struct ThresholdResult {
  ApReport ap;
  std::vector<std::int64_t> tp;  // per class
  std::vector<std::int64_t> fp;
};

struct RunReport {
  EvalConfig config;  // echo of the semantic configuration
  int workers = 1;
  std::int64_t image_count = 0;
  std::int64_t detection_count = 0;
  std::vector<std::int64_t> easy_gt_counts;
  std::vector<int> excluded_classes;  // classes with no easy ground truth
  std::vector<ThresholdResult> per_threshold;
  double map_mean = 0.0;  // mean over thresholds
  double parse_seconds = 0.0;
  double evaluate_seconds = 0.0;
};

/// Runs the batched pipeline end to end: batches stream through IoU,
/// filtering, categorization and extraction once per batch, accumulators per
/// threshold are folded, and the configured AP method produces one report per
/// threshold. `workers` > 1 evaluates batches on a pool with private
/// accumulators; results are identical for any worker count and batch size.
RunReport evaluate_dataset(const Dataset& dataset, const EvalConfig& config,
                           int workers = 1);

/// Accumulates the whole dataset at a single threshold and returns the
/// resulting precision/recall curves (used by the PR export).
PrCurves compute_curves(const Dataset& dataset, const EvalConfig& config,
                        double iou_threshold);

enum class DeltaExplanation {
  kDifficultOverlap,  // the detection's best overlap above t is a difficult GT
  kCascade,           // knock-on effect of another reordered detection
  kUnexplained,
};

struct DetectionDelta {
  std::int64_t image_index = 0;
  std::string image_id;
  int det_index = 0;
  std::int32_t label = 0;
  double score = 0.0;
  std::uint8_t sequential_category = 0;
  std::uint8_t parallel_category = 0;
  DeltaExplanation explanation = DeltaExplanation::kUnexplained;
};

struct CrosscheckReport {
  double iou_threshold = 0.0;
  std::int64_t detection_count = 0;
  std::vector<std::int64_t> tp_parallel, tp_sequential;
  std::vector<std::int64_t> fp_parallel, fp_sequential;
  double map_parallel = 0.0;    // batched pipeline + configured AP method
  double map_sequential = 0.0;  // reference path + step-curve AP
  std::vector<DetectionDelta> deltas;
  int unexplained_count = 0;
};

/// Runs both paths at one threshold and reconciles them per detection. Every
/// difference is attributed: either the detection itself best-overlaps a
/// difficult ground truth (the two paths order that case differently), or it
/// is a cascade of such a reordering; anything else counts as unexplained.
CrosscheckReport crosscheck_dataset(const Dataset& dataset, const EvalConfig& config,
                                    double iou_threshold);

struct BenchReport {
  SyntheticSpec workload;
  std::int64_t detection_count = 0;
  double iou_threshold = 0.5;
  int repeat = 1;
  int batch_size = 0;
  int workers = 1;
  std::vector<double> sequential_runs;  // seconds
  std::vector<double> parallel_runs;
  double sequential_median = 0.0;
  double parallel_median = 0.0;
  double speedup = 0.0;  // sequential_median / parallel_median
  double sequential_map = 0.0;
  double parallel_map = 0.0;
};

/// Generates the workload, then times the sequential reference path and the
/// batched pipeline over `repeat` runs each. Reports medians and their ratio;
/// asserts nothing.
BenchReport run_bench(const SyntheticSpec& spec, const EvalConfig& config,
                      int repeat, int workers);

/// Writes one `class_<c>.csv` per class into out_dir: header
/// `recall,precision`, then the class's curve points; the trapezoid method
/// additionally front-loads its dummy point (0, 1) for non-empty classes.
void export_pr_curves(const PrCurves& curves, ApMethod method,
                      const std::string& out_dir);

// Machine-readable report forms (stable key order).
nlohmann::ordered_json to_json(const RunReport& report);
nlohmann::ordered_json to_json(const CrosscheckReport& report);
nlohmann::ordered_json to_json(const BenchReport& report);

// Human-readable summaries.
void print_summary(const RunReport& report, std::ostream& out);
void print_summary(const CrosscheckReport& report, std::ostream& out);
void print_summary(const BenchReport& report, std::ostream& out);

const char* category_name(std::uint8_t code);

}  // namespace mapeval

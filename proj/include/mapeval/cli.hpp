#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mapeval/types.hpp"

namespace mapeval::cli {

/// Options shared by the file-driven subcommands (eval, crosscheck,
/// export-pr). List-valued flags arrive pre-parsed; see parse_value_list.
struct CommonOptions {
  std::string gt_path;
  std::string det_path;
  std::vector<double> iou_thresholds{0.5};
  std::string ap_method = "trapezoid";
  std::vector<double> recall_levels;  // empty = the default 11-point grid
  int batch_size = 32;
  int classes = 0;  // 0 = infer as 1 + max label across both files
  double epsilon = 1e-9;
  int workers = 1;
  std::string output;         // report destination; empty = stdout
  std::string export_pr_dir;  // when set, also write per-class curve files
};

/// Generator and timing knobs for the bench subcommand.
struct BenchOptions {
  std::uint64_t seed = 1;
  int images = 1000;
  int classes = 10;
  int max_gts_per_image = 6;
  int dets_per_gt = 2;  // exact jittered copies emitted per ground-truth box
  double jitter = 4.0;
  double difficult_prob = 0.0;
  double discard_prob = 0.0;
  double false_per_image = 1.0;
  int score_decimals = -1;
  int repeat = 3;
  int batch_size = 32;
  int workers = 1;
  double iou_threshold = 0.5;
  double epsilon = 1e-9;
  std::string output;
};

/// Parses a threshold/level flag value: either a comma list ("0.5,0.75") or
/// an inclusive range "start:stop:step" ("0.5:0.95:0.05"). Throws ConfigError
/// on malformed input.
std::vector<double> parse_value_list(const std::string& text);

// Subcommand bodies. They return the process exit code on success and throw
// for error paths: ValidationError for bad input data (exit 1), ConfigError
// for bad configuration (exit 2); the entry point maps them.
int run_eval(const CommonOptions& options);
int run_crosscheck(const CommonOptions& options);
int run_export_pr(const CommonOptions& options);
int run_bench(const BenchOptions& options);

}  // namespace mapeval::cli

#include "mapeval/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "mapeval/dataset.hpp"
#include "mapeval/pipeline.hpp"

namespace mapeval::cli {
namespace {

double parse_number(const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + text + "'");
  }
  if (used != text.size()) {
    throw ConfigError("not a number: '" + text + "'");
  }
  return value;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t begin = 0;
  while (true) {
    const std::size_t end = text.find(sep, begin);
    parts.push_back(text.substr(begin, end - begin));
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  return parts;
}

// Reads and joins both input files, resolves the class count, and fills the
// evaluation config. Throws ValidationError for unreadable/invalid data and
// ConfigError for unresolvable configuration.
Dataset load_dataset(const CommonOptions& options, EvalConfig& config,
                     double& parse_seconds) {
  const auto start = std::chrono::steady_clock::now();

  std::ifstream gt_in(options.gt_path);
  if (!gt_in) {
    throw ValidationError("cannot open ground-truth file: " + options.gt_path);
  }
  auto gt = parse_ground_truth(gt_in);

  std::ifstream det_in(options.det_path);
  if (!det_in) {
    throw ValidationError("cannot open detections file: " + options.det_path);
  }
  auto det = parse_detections(det_in);

  Dataset dataset = Dataset::build(std::move(gt), std::move(det));

  int k = options.classes;
  if (k <= 0) {
    k = dataset.inferred_class_count();
    if (k <= 0) {
      throw ConfigError(
          "class count cannot be inferred from inputs without labels; pass --classes");
    }
  }

  config.class_count = k;
  config.iou_thresholds = options.iou_thresholds;
  config.ap_method = ap_method_from_string(options.ap_method);
  config.recall_levels =
      options.recall_levels.empty() ? default_recall_levels() : options.recall_levels;
  config.epsilon = options.epsilon;
  config.batch_size = options.batch_size;
  config.validate();
  if (options.workers < 1) {
    throw ConfigError("workers must be >= 1");
  }

  dataset.validate(k);
  parse_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return dataset;
}

void write_report(const nlohmann::ordered_json& report, const std::string& output) {
  const std::string text = report.dump(2);
  if (output.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(output);
  if (!out) {
    throw std::runtime_error("cannot write report to " + output);
  }
  out << text << "\n";
}

}  // namespace

std::vector<double> parse_value_list(const std::string& text) {
  if (text.empty()) {
    throw ConfigError("empty value list");
  }
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) {
      throw ConfigError("range must be start:stop:step, got '" + text + "'");
    }
    const double start = parse_number(parts[0]);
    const double stop = parse_number(parts[1]);
    const double step = parse_number(parts[2]);
    if (step <= 0.0) {
      throw ConfigError("range step must be > 0, got '" + parts[2] + "'");
    }
    if (stop < start) {
      throw ConfigError("range stop must be >= start in '" + text + "'");
    }
    // Inclusive endpoint: 0:1:0.1 yields the canonical 11-point grid. Each
    // value is snapped to 12 decimals so accumulated step error cannot move a
    // level off the decimal the user wrote (0.3, not 0.30000000000000004).
    const auto count = static_cast<std::int64_t>((stop - start) / step + 0.5);
    std::vector<double> values;
    for (std::int64_t i = 0; i <= count; ++i) {
      const double raw = start + static_cast<double>(i) * step;
      values.push_back(std::round(raw * 1e12) / 1e12);
    }
    return values;
  }
  std::vector<double> values;
  for (const auto& part : split(text, ',')) {
    values.push_back(parse_number(part));
  }
  return values;
}

int run_eval(const CommonOptions& options) {
  EvalConfig config;
  double parse_seconds = 0.0;
  const Dataset dataset = load_dataset(options, config, parse_seconds);

  RunReport report = evaluate_dataset(dataset, config, options.workers);
  report.parse_seconds = parse_seconds;

  print_summary(report, std::cerr);
  write_report(to_json(report), options.output);

  if (!options.export_pr_dir.empty()) {
    const PrCurves curves =
        compute_curves(dataset, config, config.iou_thresholds.front());
    export_pr_curves(curves, config.ap_method, options.export_pr_dir);
    std::cerr << "PR curves for " << config.class_count << " classes written to "
              << options.export_pr_dir << "\n";
  }
  return 0;
}

int run_crosscheck(const CommonOptions& options) {
  EvalConfig config;
  double parse_seconds = 0.0;
  const Dataset dataset = load_dataset(options, config, parse_seconds);

  const CrosscheckReport report =
      crosscheck_dataset(dataset, config, config.iou_thresholds.front());
  print_summary(report, std::cerr);
  write_report(to_json(report), options.output);
  return 0;
}

int run_export_pr(const CommonOptions& options) {
  if (options.export_pr_dir.empty()) {
    throw ConfigError("export-pr requires --export-pr DIR");
  }
  EvalConfig config;
  double parse_seconds = 0.0;
  const Dataset dataset = load_dataset(options, config, parse_seconds);

  const PrCurves curves =
      compute_curves(dataset, config, config.iou_thresholds.front());
  export_pr_curves(curves, config.ap_method, options.export_pr_dir);
  std::cerr << "PR curves for " << config.class_count << " classes written to "
            << options.export_pr_dir << "\n";
  return 0;
}

int run_bench(const BenchOptions& options) {
  SyntheticSpec spec;
  spec.seed = options.seed;
  spec.image_count = options.images;
  spec.class_count = options.classes;
  spec.max_gts_per_image = options.max_gts_per_image;
  spec.min_dets_per_gt = options.dets_per_gt;
  spec.max_dets_per_gt = options.dets_per_gt;
  spec.jitter = options.jitter;
  spec.difficult_probability = options.difficult_prob;
  spec.discard_probability = options.discard_prob;
  spec.false_detections_per_image = options.false_per_image;
  spec.score_decimals = options.score_decimals;

  EvalConfig config;
  config.class_count = options.classes;
  config.iou_thresholds = {options.iou_threshold};
  config.epsilon = options.epsilon;
  config.batch_size = options.batch_size;

  const BenchReport report =
      mapeval::run_bench(spec, config, options.repeat, options.workers);
  print_summary(report, std::cerr);
  write_report(to_json(report), options.output);
  return 0;
}

}  // namespace mapeval::cli

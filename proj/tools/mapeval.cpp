#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mapeval/cli.hpp"
#include "mapeval/types.hpp"

namespace {

// CLI-side storage for one file-driven subcommand: list flags stay text until
// after parsing so both "0.5,0.75" and "0.5:0.95:0.05" work.
struct CommonFlags {
  mapeval::cli::CommonOptions options;
  std::string iou_text = "0.5";
  std::string levels_text = "0:1:0.1";

  void resolve() {
    options.iou_thresholds = mapeval::cli::parse_value_list(iou_text);
    options.recall_levels = mapeval::cli::parse_value_list(levels_text);
  }
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  auto& o = flags.options;
  cmd->add_option("--gt", o.gt_path, "ground-truth file, one JSON record per line")
      ->required();
  cmd->add_option("--det", o.det_path, "detections file, one JSON record per line")
      ->required();
  cmd->add_option("--iou-thresholds", flags.iou_text,
                  "comma list (0.5,0.75) or start:stop:step range (0.5:0.95:0.05)")
      ->capture_default_str();
  cmd->add_option("--ap-method", o.ap_method, "trapezoid | step | recall-levels")
      ->capture_default_str();
  cmd->add_option("--recall-levels", flags.levels_text,
                  "recall grid for --ap-method recall-levels")
      ->capture_default_str();
  cmd->add_option("--batch-size", o.batch_size, "images per mini-batch")
      ->capture_default_str();
  cmd->add_option("--classes", o.classes,
                  "class count; by default inferred as 1 + max label");
  cmd->add_option("--epsilon", o.epsilon, "precision denominator guard")
      ->capture_default_str();
  cmd->add_option("--workers", o.workers,
                  "worker threads for batch evaluation; 1 = serial")
      ->capture_default_str();
  cmd->add_option("--output", o.output,
                  "write the JSON report here instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mAP evaluation for object detection: a batched array pipeline "
               "checked against a sequential reference"};
  app.require_subcommand(1);

  CommonFlags eval_flags, crosscheck_flags, export_flags;

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "evaluate detections and report per-class AP and mAP");
  add_common_flags(eval_cmd, eval_flags);
  eval_cmd->add_option("--export-pr", eval_flags.options.export_pr_dir,
                       "also write per-class PR curves (CSV) to this directory");

  CLI::App* crosscheck_cmd = app.add_subcommand(
      "crosscheck", "run both the batched pipeline and the sequential reference, "
                    "report per-class deltas and every differing detection");
  add_common_flags(crosscheck_cmd, crosscheck_flags);

  CLI::App* export_cmd =
      app.add_subcommand("export-pr", "write per-class PR curves as CSV files");
  add_common_flags(export_cmd, export_flags);
  export_cmd->add_option("--export-pr", export_flags.options.export_pr_dir,
                         "output directory for class_<c>.csv files")
      ->required();

  mapeval::cli::BenchOptions bench;
  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "generate a workload and time the sequential reference against "
               "the batched pipeline");
  bench_cmd->add_option("--seed", bench.seed, "generator seed")->capture_default_str();
  bench_cmd->add_option("--images", bench.images, "image count")->capture_default_str();
  bench_cmd->add_option("--classes", bench.classes, "class count")->capture_default_str();
  bench_cmd->add_option("--max-gts", bench.max_gts_per_image,
                        "max ground-truth boxes per image")
      ->capture_default_str();
  bench_cmd->add_option("--dets-per-gt", bench.dets_per_gt,
                        "jittered detections per ground-truth box")
      ->capture_default_str();
  bench_cmd->add_option("--jitter", bench.jitter, "coordinate jitter, pixels")
      ->capture_default_str();
  bench_cmd->add_option("--difficult-prob", bench.difficult_prob,
                        "probability a ground-truth box is difficult")
      ->capture_default_str();
  bench_cmd->add_option("--discard-prob", bench.discard_prob,
                        "probability a detection is discarded")
      ->capture_default_str();
  bench_cmd->add_option("--false-per-image", bench.false_per_image,
                        "expected unmatched detections per image")
      ->capture_default_str();
  bench_cmd->add_option("--score-decimals", bench.score_decimals,
                        "quantize scores to N decimals to force ties; -1 = off")
      ->capture_default_str();
  bench_cmd->add_option("--repeat", bench.repeat, "timed runs per path")
      ->capture_default_str();
  bench_cmd->add_option("--batch-size", bench.batch_size, "images per mini-batch")
      ->capture_default_str();
  bench_cmd->add_option("--workers", bench.workers, "worker threads for the batched path")
      ->capture_default_str();
  bench_cmd->add_option("--iou-threshold", bench.iou_threshold, "IoU threshold")
      ->capture_default_str();
  bench_cmd->add_option("--epsilon", bench.epsilon, "precision denominator guard")
      ->capture_default_str();
  bench_cmd->add_option("--output", bench.output,
                        "write the JSON report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage is a config error
  }

  try {
    if (eval_cmd->parsed()) {
      eval_flags.resolve();
      return mapeval::cli::run_eval(eval_flags.options);
    }
    if (crosscheck_cmd->parsed()) {
      crosscheck_flags.resolve();
      return mapeval::cli::run_crosscheck(crosscheck_flags.options);
    }
    if (export_cmd->parsed()) {
      export_flags.resolve();
      return mapeval::cli::run_export_pr(export_flags.options);
    }
    if (bench_cmd->parsed()) {
      return mapeval::cli::run_bench(bench);
    }
  } catch (const mapeval::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const mapeval::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

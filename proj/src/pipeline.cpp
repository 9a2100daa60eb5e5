#include "mapeval/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "mapeval/matcher.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mapeval {
namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Shortest unambiguous decimal form, for CSV cells and threshold labels.
std::string compact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::int64_t count_detections(const Dataset& dataset) {
  std::int64_t total = 0;
  for (const auto& record : dataset.detections) {
    total += static_cast<std::int64_t>(record.size());
  }
  return total;
}

// One mini-batch through the kernel chain, extracting into one accumulator
// per IoU threshold. The driver runs the fused reduction form of the matcher:
// the per-detection reductions are threshold-independent and computed once,
// and categorize_reduced produces the same matrix as the cube chain
// (pairwise_iou + filter_iou + categorize_below + categorize_above).
void process_batch(const Dataset& dataset, const BatchRange& range,
                   const EvalConfig& config, std::vector<Accumulator>& into) {
  const BatchPair batch = make_batch(dataset, range, config);
  const MatchReductions red = reduce_batch(batch.det, batch.gt);
  for (std::size_t ti = 0; ti < config.iou_thresholds.size(); ++ti) {
    const CategoryMatrix d =
        categorize_reduced(red, batch.det, config.iou_thresholds[ti]);
    extract(into[ti], d, batch.det);
  }
}

// Mean step-curve AP over the reference evaluator's per-class vectors,
// excluding classes without easy ground truth (recall would be undefined).
double sequential_map_step(const SequentialEvaluation& seq,
                           const std::vector<std::int64_t>& easy_gt_counts) {
  double sum = 0.0;
  int included = 0;
  for (std::size_t c = 0; c < easy_gt_counts.size(); ++c) {
    if (easy_gt_counts[c] > 0) {
      sum += ap_step_everypoint(seq.precision[c], seq.recall[c]);
      ++included;
    }
  }
  return included > 0 ? sum / included : 0.0;
}

// Per-detection categories out of the batched pipeline, reshaped back to
// ragged per-image lists so they can be compared against the reference path.
std::vector<std::vector<std::uint8_t>> parallel_categories(const Dataset& dataset,
                                                           const EvalConfig& config,
                                                           double threshold) {
  std::vector<std::vector<std::uint8_t>> out(dataset.image_count());
  BatchIterator it(dataset, config);
  while (!it.done()) {
    const BatchPair batch = it.next();
    IouCube cube = pairwise_iou(batch.det, batch.gt);
    filter_iou(cube, batch.det, batch.gt);
    CategoryMatrix d = categorize_below(cube, batch.det, threshold);
    categorize_above(d, cube, batch.det, batch.gt, threshold);
    for (int i = 0; i < batch.det.image_count; ++i) {
      const std::int64_t g = batch.det.first_image + i;
      const int real = static_cast<int>(dataset.detections[g].size());
      out[g].resize(real);
      for (int j = 0; j < real; ++j) {
        out[g][j] = d.at(i, j);
      }
    }
  }
  return out;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

json int_delta_pct(std::int64_t parallel, std::int64_t sequential) {
  if (sequential == 0) return parallel == 0 ? json(0.0) : json();
  return 100.0 * std::abs(static_cast<double>(parallel - sequential)) /
         static_cast<double>(sequential);
}

json real_delta_pct(double parallel, double sequential) {
  if (sequential == 0.0) return parallel == 0.0 ? json(0.0) : json();
  return 100.0 * std::abs(parallel - sequential) / sequential;
}

std::string pct_text(const json& pct) {
  return pct.is_null() ? "n/a" : fixed4(pct.get<double>()) + "%";
}

const char* explanation_name(DeltaExplanation e) {
  switch (e) {
    case DeltaExplanation::kDifficultOverlap:
      return "difficult-overlap";
    case DeltaExplanation::kCascade:
      return "cascade";
    default:
      return "unexplained";
  }
}

}  // namespace

const char* category_name(std::uint8_t code) {
  switch (code) {
    case kCategoryTruePositive:
      return "tp";
    case kCategoryFalsePositive:
      return "fp";
    default:
      return "ignored";
  }
}

RunReport evaluate_dataset(const Dataset& dataset, const EvalConfig& config,
                           int workers) {
  config.validate();
  if (workers < 1) {
    throw ConfigError("workers must be >= 1");
  }
  dataset.validate(config.class_count);

  const auto start = Clock::now();
  const int k = config.class_count;
  const auto easy = count_easy_gt(dataset, k);
  const auto ranges = batch_ranges(dataset.image_count(), config.batch_size);
  const int thresholds = static_cast<int>(config.iou_thresholds.size());
  const std::int64_t total_dets = count_detections(dataset);

  std::vector<Accumulator> accs(thresholds, Accumulator(easy));
  // One upfront reservation per threshold (detection count is an upper bound
  // on kept rows) so per-batch extract appends never reallocate.
  for (auto& acc : accs) {
    const auto cap = static_cast<std::size_t>(total_dets);
    acc.labels.reserve(cap);
    acc.scores.reserve(cap);
    acc.tp_flags.reserve(cap);
    acc.image_indices.reserve(cap);
    acc.det_indices.reserve(cap);
  }
#ifdef _OPENMP
  if (workers > 1 && ranges.size() > 1) {
    // Batches go to a worker pool with private accumulators. Merge order does
    // not matter: the curve pass re-sorts on the global (score, image,
    // detection) key, so the result is identical to the serial loop.
    std::vector<std::vector<Accumulator>> locals(workers, accs);
#pragma omp parallel num_threads(workers)
    {
      const int tid = omp_get_thread_num();
#pragma omp for schedule(static)
      for (std::int64_t r = 0; r < static_cast<std::int64_t>(ranges.size()); ++r) {
        process_batch(dataset, ranges[r], config, locals[tid]);
      }
    }
    for (const auto& local : locals) {
      for (int ti = 0; ti < thresholds; ++ti) {
        accs[ti] = merge(accs[ti], local[ti]);
      }
    }
  } else
#endif
  {
    for (const auto& range : ranges) {
      process_batch(dataset, range, config, accs);
    }
  }

  RunReport report;
  report.config = config;
  report.workers = workers;
  report.image_count = dataset.image_count();
  report.detection_count = total_dets;
  report.easy_gt_counts = easy;
  for (int c = 0; c < k; ++c) {
    if (easy[c] == 0) {
      report.excluded_classes.push_back(c);
    }
  }

  std::vector<ApReport> ap_reports;
  for (int ti = 0; ti < thresholds; ++ti) {
    const double t = config.iou_thresholds[ti];
    const ClassCurves curves = compute_class_curves(accs[ti], k, config.epsilon);

    ThresholdResult result;
    switch (config.ap_method) {
      case ApMethod::kTrapezoidEveryPoint:
        result.ap = ap_trapezoid(curves, t);
        break;
      case ApMethod::kStepEveryPoint:
        result.ap = ap_step(curves, t);
        break;
      case ApMethod::kRecallLevels:
        result.ap = ap_recall_levels(curves, config.recall_levels, t);
        break;
    }
    CategoryTotals totals = category_totals(accs[ti], k);
    result.tp = std::move(totals.tp);
    result.fp = std::move(totals.fp);
    ap_reports.push_back(result.ap);
    report.per_threshold.push_back(std::move(result));
  }
  report.map_mean = map_over_thresholds(ap_reports);
  report.evaluate_seconds = seconds_since(start);
  return report;
}

PrCurves compute_curves(const Dataset& dataset, const EvalConfig& config,
                        double iou_threshold) {
  config.validate();
  dataset.validate(config.class_count);
  EvalConfig one = config;
  one.iou_thresholds = {iou_threshold};
  one.validate();

  std::vector<Accumulator> accs(1, Accumulator(count_easy_gt(dataset, config.class_count)));
  for (const auto& range : batch_ranges(dataset.image_count(), config.batch_size)) {
    process_batch(dataset, range, one, accs);
  }
  return compute_pr(accs[0], config.class_count, config.epsilon);
}

CrosscheckReport crosscheck_dataset(const Dataset& dataset, const EvalConfig& config,
                                    double iou_threshold) {
  EvalConfig one = config;
  one.iou_thresholds = {iou_threshold};
  one.validate();
  dataset.validate(one.class_count);
  const int k = one.class_count;
  const auto easy = count_easy_gt(dataset, k);

  const RunReport parallel = evaluate_dataset(dataset, one, 1);
  const SequentialEvaluation seq = sequential_evaluate(
      dataset, k, iou_threshold, one.epsilon, MatchPolicy::kBestOverlapOverall);
  // A third run mirrors the batched pipeline's difficult handling in
  // sequential form; it reproduces the parallel categories detection for
  // detection, which is what lets every difference be attributed.
  const SequentialEvaluation alt = sequential_evaluate(
      dataset, k, iou_threshold, one.epsilon, MatchPolicy::kBestOverlapEasyOnly);
  const auto par_categories = parallel_categories(dataset, one, iou_threshold);

  CrosscheckReport report;
  report.iou_threshold = iou_threshold;
  report.detection_count = count_detections(dataset);
  report.tp_parallel = parallel.per_threshold[0].tp;
  report.fp_parallel = parallel.per_threshold[0].fp;
  report.tp_sequential = seq.tp_totals;
  report.fp_sequential = seq.fp_totals;
  report.map_parallel = parallel.per_threshold[0].ap.map_value;
  report.map_sequential = sequential_map_step(seq, easy);

  for (std::int64_t i = 0; i < dataset.image_count(); ++i) {
    const auto& gt = dataset.ground_truth[i];
    const auto& det = dataset.detections[i];
    for (std::size_t j = 0; j < det.size(); ++j) {
      const std::uint8_t s = seq.categories[i][j];
      const std::uint8_t p = par_categories[i][j];
      if (s == p) continue;

      DetectionDelta delta;
      delta.image_index = i;
      delta.image_id = gt.image_id;
      delta.det_index = static_cast<int>(j);
      delta.label = det.labels[j];
      delta.score = det.scores[j];
      delta.sequential_category = s;
      delta.parallel_category = p;

      if (p != alt.categories[i][j]) {
        delta.explanation = DeltaExplanation::kUnexplained;
        ++report.unexplained_count;
      } else {
        // Direct reordering: this detection's best overlap among all
        // same-class ground truth clears the threshold at a difficult box,
        // the one case where the two paths pick different matches.
        double best = 0.0;
        int arg = -1;
        for (std::size_t g = 0; g < gt.size(); ++g) {
          if (gt.labels[g] != det.labels[j]) continue;
          const double v = box_iou(det.boxes[j], gt.boxes[g]);
          if (arg < 0 || v > best) {
            best = v;
            arg = static_cast<int>(g);
          }
        }
        const bool direct = arg >= 0 && best > iou_threshold && gt.difficult[arg];
        delta.explanation = direct ? DeltaExplanation::kDifficultOverlap
                                   : DeltaExplanation::kCascade;
      }
      report.deltas.push_back(std::move(delta));
    }
  }
  return report;
}

BenchReport run_bench(const SyntheticSpec& spec, const EvalConfig& config,
                      int repeat, int workers) {
  spec.validate();
  if (repeat < 1) {
    throw ConfigError("repeat must be >= 1");
  }
  if (workers < 1) {
    throw ConfigError("workers must be >= 1");
  }
  EvalConfig cfg = config;
  if (cfg.class_count <= 0) {
    cfg.class_count = spec.class_count;
  }
  cfg.iou_thresholds = {config.iou_thresholds.empty() ? 0.5 : config.iou_thresholds.front()};
  // The sequential reference reports step AP; use it on the batched side too
  // so the mAP cross-check compares like with like.
  cfg.ap_method = ApMethod::kStepEveryPoint;
  cfg.validate();

  const Dataset data = generate(spec);
  const auto easy = count_easy_gt(data, cfg.class_count);
  const double t = cfg.iou_thresholds.front();

  BenchReport report;
  report.workload = spec;
  report.detection_count = count_detections(data);
  report.iou_threshold = t;
  report.repeat = repeat;
  report.batch_size = cfg.batch_size;
  report.workers = workers;

  for (int r = 0; r < repeat; ++r) {
    const auto start = Clock::now();
    const SequentialEvaluation seq =
        sequential_evaluate(data, cfg.class_count, t, cfg.epsilon);
    report.sequential_map = sequential_map_step(seq, easy);
    report.sequential_runs.push_back(seconds_since(start));
  }
  for (int r = 0; r < repeat; ++r) {
    const auto start = Clock::now();
    const RunReport run = evaluate_dataset(data, cfg, workers);
    report.parallel_map = run.map_mean;
    report.parallel_runs.push_back(seconds_since(start));
  }

  report.sequential_median = median(report.sequential_runs);
  report.parallel_median = median(report.parallel_runs);
  report.speedup = report.parallel_median > 0.0
                       ? report.sequential_median / report.parallel_median
                       : 0.0;
  return report;
}

void export_pr_curves(const PrCurves& curves, ApMethod method,
                      const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);  // open below reports failures
  for (int c = 0; c < curves.class_count; ++c) {
    const std::string path = out_dir + "/class_" + std::to_string(c) + ".csv";
    std::ofstream out(path);
    if (!out) {
      throw std::runtime_error("cannot write " + path);
    }
    out << "recall,precision\n";
    const auto precision = class_precision(curves, c);
    const auto recall = class_recall(curves, c);
    if (method == ApMethod::kTrapezoidEveryPoint && !precision.empty()) {
      out << "0,1\n";  // the dummy point the trapezoid area starts from
    }
    for (std::size_t j = 0; j < precision.size(); ++j) {
      out << compact(recall[j]) << ',' << compact(precision[j]) << '\n';
    }
  }
}

nlohmann::ordered_json to_json(const RunReport& report) {
  json root;
  root["schema"] = "mapeval/run/1";

  json config;
  config["classes"] = report.config.class_count;
  config["iou_thresholds"] = report.config.iou_thresholds;
  config["ap_method"] = to_string(report.config.ap_method);
  config["recall_levels"] = report.config.recall_levels;
  config["epsilon"] = report.config.epsilon;
  root["config"] = config;

  json dataset;
  dataset["images"] = report.image_count;
  dataset["detections"] = report.detection_count;
  dataset["easy_gt"] = report.easy_gt_counts;
  root["dataset"] = dataset;
  root["excluded_classes"] = report.excluded_classes;

  json thresholds = json::array();
  for (const auto& tr : report.per_threshold) {
    json jt;
    jt["iou_threshold"] = tr.ap.iou_threshold;
    jt["map"] = tr.ap.map_value;
    json per_class = json::array();
    for (std::size_t c = 0; c < tr.ap.per_class_ap.size(); ++c) {
      json jc;
      jc["class"] = static_cast<int>(c);
      jc["ap"] = tr.ap.included[c] ? json(tr.ap.per_class_ap[c]) : json();
      jc["tp"] = tr.tp[c];
      jc["fp"] = tr.fp[c];
      per_class.push_back(jc);
    }
    jt["per_class"] = per_class;
    thresholds.push_back(jt);
  }
  root["thresholds"] = thresholds;
  root["map_mean"] = report.map_mean;

  // Everything below describes how the run was executed, not what it
  // computed; results are invariant to these knobs.
  json execution;
  execution["batch_size"] = report.config.batch_size;
  execution["max_dets_per_image"] = report.config.max_dets_per_image;
  execution["max_gts_per_image"] = report.config.max_gts_per_image;
  execution["workers"] = report.workers;
  execution["parse_seconds"] = report.parse_seconds;
  execution["evaluate_seconds"] = report.evaluate_seconds;
  root["execution"] = execution;
  return root;
}

nlohmann::ordered_json to_json(const CrosscheckReport& report) {
  json root;
  root["schema"] = "mapeval/crosscheck/1";
  root["iou_threshold"] = report.iou_threshold;
  root["detections"] = report.detection_count;

  json per_class = json::array();
  for (std::size_t c = 0; c < report.tp_parallel.size(); ++c) {
    json jc;
    jc["class"] = static_cast<int>(c);
    jc["tp_parallel"] = report.tp_parallel[c];
    jc["tp_sequential"] = report.tp_sequential[c];
    jc["tp_delta_pct"] = int_delta_pct(report.tp_parallel[c], report.tp_sequential[c]);
    jc["fp_parallel"] = report.fp_parallel[c];
    jc["fp_sequential"] = report.fp_sequential[c];
    jc["fp_delta_pct"] = int_delta_pct(report.fp_parallel[c], report.fp_sequential[c]);
    per_class.push_back(jc);
  }
  root["per_class"] = per_class;
  root["map_parallel"] = report.map_parallel;
  root["map_sequential"] = report.map_sequential;
  root["map_delta_pct"] = real_delta_pct(report.map_parallel, report.map_sequential);

  json differing = json::array();
  for (const auto& delta : report.deltas) {
    json jd;
    jd["image_index"] = delta.image_index;
    jd["image_id"] = delta.image_id;
    jd["detection"] = delta.det_index;
    jd["class"] = delta.label;
    jd["score"] = delta.score;
    jd["sequential"] = category_name(delta.sequential_category);
    jd["parallel"] = category_name(delta.parallel_category);
    jd["explanation"] = explanation_name(delta.explanation);
    differing.push_back(jd);
  }
  root["differing"] = differing;
  root["unexplained"] = report.unexplained_count;
  return root;
}

nlohmann::ordered_json to_json(const BenchReport& report) {
  json root;
  root["schema"] = "mapeval/bench/1";

  json workload;
  workload["seed"] = report.workload.seed;
  workload["images"] = report.workload.image_count;
  workload["classes"] = report.workload.class_count;
  workload["gts_per_image"] = {report.workload.min_gts_per_image,
                               report.workload.max_gts_per_image};
  workload["dets_per_gt"] = {report.workload.min_dets_per_gt,
                             report.workload.max_dets_per_gt};
  workload["false_detections_per_image"] = report.workload.false_detections_per_image;
  workload["difficult_probability"] = report.workload.difficult_probability;
  workload["discard_probability"] = report.workload.discard_probability;
  workload["detections"] = report.detection_count;
  root["workload"] = workload;

  root["iou_threshold"] = report.iou_threshold;
  root["repeat"] = report.repeat;
  root["batch_size"] = report.batch_size;
  root["workers"] = report.workers;

  json seq;
  seq["runs"] = report.sequential_runs;
  seq["median"] = report.sequential_median;
  root["sequential_seconds"] = seq;
  json par;
  par["runs"] = report.parallel_runs;
  par["median"] = report.parallel_median;
  root["parallel_seconds"] = par;

  root["speedup"] = report.speedup;
  json maps;
  maps["sequential"] = report.sequential_map;
  maps["parallel"] = report.parallel_map;
  root["map"] = maps;
  return root;
}

void print_summary(const RunReport& report, std::ostream& out) {
  out << "dataset: " << report.image_count << " images, " << report.detection_count
      << " detections, " << report.config.class_count << " classes\n";
  if (!report.excluded_classes.empty()) {
    out << "excluded from mAP (no easy ground truth): "
        << report.excluded_classes.size() << " of " << report.config.class_count
        << " classes\n";
  }
  for (const auto& tr : report.per_threshold) {
    std::int64_t tp = 0, fp = 0;
    for (std::size_t c = 0; c < tr.tp.size(); ++c) {
      tp += tr.tp[c];
      fp += tr.fp[c];
    }
    out << "IoU " << compact(tr.ap.iou_threshold) << ": mAP "
        << fixed4(tr.ap.map_value) << "  (TP " << tp << ", FP " << fp << ")\n";
    for (std::size_t c = 0; c < tr.ap.per_class_ap.size(); ++c) {
      out << "  class " << c << ": AP "
          << (tr.ap.included[c] ? fixed4(tr.ap.per_class_ap[c]) : "   n/a")
          << "  easy GT " << report.easy_gt_counts[c] << "  TP " << tr.tp[c]
          << "  FP " << tr.fp[c] << "\n";
    }
  }
  out << "mAP (" << to_string(report.config.ap_method) << ", mean over "
      << report.per_threshold.size() << " threshold"
      << (report.per_threshold.size() == 1 ? "" : "s")
      << "): " << fixed4(report.map_mean) << "\n";
}

void print_summary(const CrosscheckReport& report, std::ostream& out) {
  out << "crosscheck at IoU " << compact(report.iou_threshold) << " over "
      << report.detection_count << " detections\n";
  out << std::left << std::setw(7) << "class" << std::right << std::setw(9)
      << "TP par" << std::setw(9) << "TP seq" << std::setw(11) << "dTP%"
      << std::setw(9) << "FP par" << std::setw(9) << "FP seq" << std::setw(11)
      << "dFP%" << "\n";
  for (std::size_t c = 0; c < report.tp_parallel.size(); ++c) {
    out << std::left << std::setw(7) << c << std::right << std::setw(9)
        << report.tp_parallel[c] << std::setw(9) << report.tp_sequential[c]
        << std::setw(11) << pct_text(int_delta_pct(report.tp_parallel[c], report.tp_sequential[c]))
        << std::setw(9) << report.fp_parallel[c] << std::setw(9)
        << report.fp_sequential[c] << std::setw(11)
        << pct_text(int_delta_pct(report.fp_parallel[c], report.fp_sequential[c]))
        << "\n";
  }
  out << "mAP: parallel " << fixed4(report.map_parallel) << ", sequential "
      << fixed4(report.map_sequential) << " (delta "
      << pct_text(real_delta_pct(report.map_parallel, report.map_sequential))
      << ")\n";

  int direct = 0, cascade = 0;
  for (const auto& delta : report.deltas) {
    if (delta.explanation == DeltaExplanation::kDifficultOverlap) ++direct;
    if (delta.explanation == DeltaExplanation::kCascade) ++cascade;
  }
  out << "differing detections: " << report.deltas.size() << " (" << direct
      << " difficult-overlap, " << cascade << " cascade, "
      << report.unexplained_count << " unexplained)\n";
}

void print_summary(const BenchReport& report, std::ostream& out) {
  out << "workload: " << report.workload.image_count << " images, "
      << report.detection_count << " detections, " << report.workload.class_count
      << " classes (seed " << report.workload.seed << ")\n";
  out << "sequential: median " << fixed4(report.sequential_median) << " s over "
      << report.repeat << " run" << (report.repeat == 1 ? "" : "s") << "\n";
  out << "parallel:   median " << fixed4(report.parallel_median) << " s over "
      << report.repeat << " run" << (report.repeat == 1 ? "" : "s") << " (batch "
      << report.batch_size << ", workers " << report.workers << ")\n";
  out << "speedup: " << fixed4(report.speedup) << "x\n";
  out << "mAP check: sequential " << fixed4(report.sequential_map) << ", parallel "
      << fixed4(report.parallel_map) << "\n";
}

}  // namespace mapeval

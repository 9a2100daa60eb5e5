#include "mapeval/average_precision.hpp"

#include <algorithm>

namespace mapeval {

namespace {

ApReport make_report(int class_count, const std::vector<std::int64_t>& easy_gt_counts,
                     ApMethod method, double iou_threshold) {
  ApReport report;
  report.iou_threshold = iou_threshold;
  report.method = method;
  report.per_class_ap.assign(class_count, 0.0);
  report.included.assign(class_count, 0);
  for (int c = 0; c < class_count && c < static_cast<int>(easy_gt_counts.size()); ++c) {
    report.included[c] = easy_gt_counts[c] > 0 ? 1 : 0;
  }
  return report;
}

void finish_map(ApReport& report) {
  double sum = 0.0;
  int included = 0;
  for (std::size_t c = 0; c < report.per_class_ap.size(); ++c) {
    if (report.included[c]) {
      sum += report.per_class_ap[c];
      ++included;
    }
  }
  report.excluded_class_count = static_cast<int>(report.per_class_ap.size()) - included;
  report.map_value = included > 0 ? sum / included : 0.0;
}

// Each class's own points out of the full matrices: foreign columns only
// repeat a class's previous value, so the compact form carries everything
// the AP methods need, and matches compute_class_curves element for element.
ClassCurves compact_from_matrices(const PrCurves& curves) {
  ClassCurves out;
  out.class_count = curves.class_count;
  out.length = curves.length;
  out.precision.resize(curves.class_count);
  out.recall.resize(curves.class_count);
  out.easy_gt_counts = curves.easy_gt_counts;
  for (std::int64_t j = 0; j < curves.length; ++j) {
    const std::int32_t c = curves.sorted_labels[j];
    out.precision[c].push_back(curves.precision_at(c, j));
    out.recall[c].push_back(curves.recall_at(c, j));
  }
  return out;
}

}  // namespace

ApReport ap_trapezoid(const ClassCurves& curves, double iou_threshold) {
  ApReport report =
      make_report(curves.class_count, curves.easy_gt_counts, ApMethod::kTrapezoidEveryPoint, iou_threshold);
  for (int c = 0; c < curves.class_count; ++c) {
    // Dummy point (q = 0, p = 1), then the class's own curve points.
    double prev_p = 1.0;
    double prev_q = 0.0;
    double area = 0.0;
    const auto& ps = curves.precision[c];
    const auto& qs = curves.recall[c];
    for (std::size_t i = 0; i < ps.size(); ++i) {
      area += (ps[i] + prev_p) * (qs[i] - prev_q) / 2.0;
      prev_p = ps[i];
      prev_q = qs[i];
    }
    report.per_class_ap[c] = area;
  }
  finish_map(report);
  return report;
}

ApReport ap_trapezoid(const PrCurves& curves, double iou_threshold) {
  return ap_trapezoid(compact_from_matrices(curves), iou_threshold);
}

ApReport ap_recall_levels(const ClassCurves& curves, const std::vector<double>& levels,
                          double iou_threshold) {
  if (levels.empty()) {
    throw ConfigError("recall levels must be nonempty");
  }
  ApReport report =
      make_report(curves.class_count, curves.easy_gt_counts, ApMethod::kRecallLevels, iou_threshold);
  for (int c = 0; c < curves.class_count; ++c) {
    const auto& ps = curves.precision[c];
    const auto& qs = curves.recall[c];
    // Recall never decreases along a class's own points, so the points at or
    // above a level form a suffix; precompute the suffix precision maxima.
    std::vector<double> suffix_max(ps.size() + 1, 0.0);
    for (std::size_t i = ps.size(); i-- > 0;) {
      suffix_max[i] = std::max(ps[i], suffix_max[i + 1]);
    }
    double sum = 0.0;
    for (const double level : levels) {
      const auto first = std::lower_bound(qs.begin(), qs.end(), level);
      sum += suffix_max[first - qs.begin()];  // a level never reached adds 0
    }
    report.per_class_ap[c] = sum / static_cast<double>(levels.size());
  }
  finish_map(report);
  return report;
}

ApReport ap_recall_levels(const PrCurves& curves, const std::vector<double>& levels,
                          double iou_threshold) {
  return ap_recall_levels(compact_from_matrices(curves), levels, iou_threshold);
}

double ap_step_everypoint(const std::vector<double>& precision,
                          const std::vector<double>& recall) {
  const std::size_t z = precision.size();
  std::vector<double> p(z + 2);
  std::vector<double> q(z + 2);
  p[0] = 0.0;
  q[0] = 0.0;
  std::copy(precision.begin(), precision.end(), p.begin() + 1);
  std::copy(recall.begin(), recall.end(), q.begin() + 1);
  p[z + 1] = 0.0;
  q[z + 1] = 1.0;

  for (std::size_t j = z + 1; j >= 2; --j) {
    p[j - 1] = std::max(p[j - 1], p[j]);
  }

  double ap = 0.0;
  for (std::size_t j = 0; j + 1 < p.size(); ++j) {
    if (q[j + 1] != q[j]) {
      ap += p[j + 1] * (q[j + 1] - q[j]);
    }
  }
  return ap;
}

ApReport ap_step(const ClassCurves& curves, double iou_threshold) {
  ApReport report =
      make_report(curves.class_count, curves.easy_gt_counts, ApMethod::kStepEveryPoint, iou_threshold);
  for (int c = 0; c < curves.class_count; ++c) {
    report.per_class_ap[c] = ap_step_everypoint(curves.precision[c], curves.recall[c]);
  }
  finish_map(report);
  return report;
}

ApReport ap_step(const PrCurves& curves, double iou_threshold) {
  return ap_step(compact_from_matrices(curves), iou_threshold);
}

double map_over_thresholds(const std::vector<ApReport>& reports) {
  if (reports.empty()) {
    throw ConfigError("no per-threshold reports to average");
  }
  double sum = 0.0;
  for (const auto& report : reports) {
    if (report.method != reports.front().method ||
        report.per_class_ap.size() != reports.front().per_class_ap.size()) {
      throw ConfigError("per-threshold reports disagree on method or class set");
    }
    sum += report.map_value;
  }
  return sum / static_cast<double>(reports.size());
}

}  // namespace mapeval

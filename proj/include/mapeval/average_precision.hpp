#pragma once

#include <cstdint>
#include <vector>

#include "mapeval/accumulator.hpp"
#include "mapeval/types.hpp"

namespace mapeval {

/// Per-class average precision at one IoU threshold. Classes without easy
/// ground truth are excluded from the mean (their slot holds 0 and
/// included[c] = 0); the exclusion count keeps the denominator auditable.
struct ApReport {
  double iou_threshold = 0.0;
  ApMethod method = ApMethod::kTrapezoidEveryPoint;
  std::vector<double> per_class_ap;
  std::vector<std::uint8_t> included;
  int excluded_class_count = 0;
  double map_value = 0.0;  // mean of per_class_ap over included classes, 0 if none
};

/// Exact area under each class's PR curve: a dummy point (recall 0,
/// precision 1) is prepended and trapezoids are summed over the class's own
/// curve points.
ApReport ap_trapezoid(const ClassCurves& curves, double iou_threshold);
ApReport ap_trapezoid(const PrCurves& curves, double iou_threshold);

/// Mean over the given recall levels of the best precision at recall >= that
/// level; a level no point reaches contributes 0. Levels must be nonempty,
/// sorted ascending, in [0, 1].
ApReport ap_recall_levels(const ClassCurves& curves, const std::vector<double>& levels,
                          double iou_threshold);
ApReport ap_recall_levels(const PrCurves& curves, const std::vector<double>& levels,
                          double iou_threshold);

/// Flattened step-curve area for one class: precision is padded with 0 at
/// both ends, recall with 0 in front and 1 at the back, spikes are removed by
/// a reverse running maximum, and rectangles are summed where recall changes.
/// This is the reference method for per-class vectors from the sequential
/// path; it equally accepts per-class slices of PrCurves.
double ap_step_everypoint(const std::vector<double>& precision,
                          const std::vector<double>& recall);

/// ap_step_everypoint applied to every class.
ApReport ap_step(const ClassCurves& curves, double iou_threshold);
ApReport ap_step(const PrCurves& curves, double iou_threshold);

/// Arithmetic mean of the per-threshold mAP values. All reports must share
/// the method and class layout; throws ConfigError on an empty list.
double map_over_thresholds(const std::vector<ApReport>& reports);

}  // namespace mapeval

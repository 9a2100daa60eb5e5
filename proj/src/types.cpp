#include "mapeval/types.hpp"

#include <cmath>

namespace mapeval {

namespace {

void check_box(const Box& b, std::size_t index) {
  const std::string at = " in box " + std::to_string(index);
  if (!(b.xmax >= b.xmin)) {
    throw ValidationError("xmax < xmin" + at);
  }
  if (!(b.ymax >= b.ymin)) {
    throw ValidationError("ymax < ymin" + at);
  }
  if (!std::isfinite(b.xmin) || !std::isfinite(b.ymin) || !std::isfinite(b.xmax) ||
      !std::isfinite(b.ymax)) {
    throw ValidationError("non-finite coordinate" + at);
  }
}

void check_labels(const std::vector<std::int32_t>& labels, int class_count) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || (class_count >= 0 && labels[i] >= class_count)) {
      throw ValidationError("label out of range: " + std::to_string(labels[i]) +
                            " at index " + std::to_string(i));
    }
  }
}

}  // namespace

void validate_image_record(const ImageGroundTruth& record, int class_count) {
  if (record.labels.size() != record.boxes.size() ||
      record.difficult.size() != record.boxes.size()) {
    throw ValidationError("mismatched list lengths in record '" + record.image_id + "'");
  }
  for (std::size_t i = 0; i < record.boxes.size(); ++i) {
    check_box(record.boxes[i], i);
  }
  check_labels(record.labels, class_count);
}

void validate_image_record(const ImageDetections& record, int class_count) {
  if (record.labels.size() != record.boxes.size() ||
      record.scores.size() != record.boxes.size() ||
      record.discarded.size() != record.boxes.size()) {
    throw ValidationError("mismatched list lengths in record '" + record.image_id + "'");
  }
  for (std::size_t i = 0; i < record.boxes.size(); ++i) {
    check_box(record.boxes[i], i);
  }
  check_labels(record.labels, class_count);
  for (std::size_t i = 0; i < record.scores.size(); ++i) {
    const double s = record.scores[i];
    if (!(s >= 0.0 && s <= 1.0)) {
      throw ValidationError("score out of range: " + std::to_string(s) + " at index " +
                            std::to_string(i));
    }
  }
}

std::string to_string(ApMethod method) {
  switch (method) {
    case ApMethod::kTrapezoidEveryPoint:
      return "trapezoid";
    case ApMethod::kStepEveryPoint:
      return "step";
    case ApMethod::kRecallLevels:
      return "recall-levels";
  }
  return "unknown";
}

ApMethod ap_method_from_string(const std::string& name) {
  if (name == "trapezoid") return ApMethod::kTrapezoidEveryPoint;
  if (name == "step") return ApMethod::kStepEveryPoint;
  if (name == "recall-levels") return ApMethod::kRecallLevels;
  throw ConfigError("unknown AP method '" + name +
                    "' (expected trapezoid, step, or recall-levels)");
}

std::vector<double> default_recall_levels() {
  std::vector<double> levels(11);
  for (int i = 0; i <= 10; ++i) {
    levels[i] = i / 10.0;
  }
  return levels;
}

void EvalConfig::validate() const {
  if (class_count <= 0) {
    throw ConfigError("class count must be positive");
  }
  if (iou_thresholds.empty()) {
    throw ConfigError("at least one IoU threshold is required");
  }
  for (double t : iou_thresholds) {
    if (!(t > 0.0 && t < 1.0)) {
      throw ConfigError("IoU threshold must lie in (0, 1), got " + std::to_string(t));
    }
  }
  if (ap_method == ApMethod::kRecallLevels) {
    if (recall_levels.empty()) {
      throw ConfigError("recall levels must be nonempty");
    }
    for (std::size_t i = 0; i < recall_levels.size(); ++i) {
      const double r = recall_levels[i];
      if (!(r >= 0.0 && r <= 1.0)) {
        throw ConfigError("recall level out of [0, 1]: " + std::to_string(r));
      }
      if (i > 0 && recall_levels[i - 1] > r) {
        throw ConfigError("recall levels must be sorted ascending");
      }
    }
  }
  if (!(epsilon > 0.0)) {
    throw ConfigError("epsilon must be positive");
  }
  if (max_dets_per_image < 0 || max_gts_per_image < 0) {
    throw ConfigError("per-image slot counts cannot be negative");
  }
  if (batch_size < 1) {
    throw ConfigError("batch size must be at least 1");
  }
}

}  // namespace mapeval

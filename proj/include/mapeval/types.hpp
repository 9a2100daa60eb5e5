#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mapeval {

/// Label stored in padded ground-truth slots. Lies outside [0, k) for any
/// class count, so the class-equality filter rejects padded slots even when
/// a real class-0 detection overlaps the zero-coordinate dummy box.
inline constexpr std::int32_t kPadLabel = -1;

/// Raised when input data breaks a documented invariant (bad box, score out
/// of range, mismatched list lengths, unknown image id, ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what, std::int64_t line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  /// 1-based input line the error refers to, or -1 when not line-bound.
  std::int64_t line() const { return line_; }

 private:
  std::int64_t line_;
};

/// Raised for bad run configuration (thresholds, recall levels, class count).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned rectangle in inclusive pixel coordinates: the box covers
/// [xmin, xmax] x [ymin, ymax], so a single pixel has width xmax - xmin + 1 = 1.
struct Box {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin + 1.0; }
  double height() const { return ymax - ymin + 1.0; }
  double area() const { return width() * height(); }

  bool operator==(const Box&) const = default;
};

/// Annotations of one image: parallel lists of boxes, class labels, and
/// difficult flags. Detections matching a difficult box are neither rewarded
/// nor punished during evaluation.
struct ImageGroundTruth {
  std::string image_id;
  std::vector<Box> boxes;
  std::vector<std::int32_t> labels;
  std::vector<bool> difficult;

  std::size_t size() const { return boxes.size(); }
  bool operator==(const ImageGroundTruth&) const = default;
};

/// Detector output for one image. `discarded[j]` marks a detection removed by
/// post-processing (NMS or similar); such detections are kept in the arrays so
/// shapes stay fixed, and are ignored during evaluation.
struct ImageDetections {
  std::string image_id;
  std::vector<Box> boxes;
  std::vector<std::int32_t> labels;
  std::vector<double> scores;
  std::vector<bool> discarded;

  std::size_t size() const { return boxes.size(); }
  bool operator==(const ImageDetections&) const = default;
};

/// Fixed-shape ground-truth mini-batch: n images, gt_slots slots per image.
/// Slots beyond an image's real annotation count hold a zero box, kPadLabel,
/// and ignore_mask = 1. Real slots carry ignore_mask = difficult flag.
struct PaddedGtBatch {
  int image_count = 0;   // n
  int gt_slots = 0;      // m-hat
  std::int64_t first_image = 0;  // global index of image 0 in this batch

  std::vector<double> coords;        // n * gt_slots * 4, row-major (xmin,ymin,xmax,ymax)
  std::vector<std::int32_t> labels;  // n * gt_slots
  std::vector<std::uint8_t> ignore_mask;  // n * gt_slots; 1 = padded slot or difficult GT

  std::size_t slot(int i, int j) const {
    return static_cast<std::size_t>(i) * gt_slots + j;
  }
  const double* box_at(int i, int j) const { return &coords[slot(i, j) * 4]; }
};

/// Fixed-shape detection mini-batch. Padded slots carry score 0 and
/// discard_mask = 1; real discarded detections also carry discard_mask = 1.
struct DetBatch {
  int image_count = 0;   // n
  int det_slots = 0;     // m
  std::int64_t first_image = 0;

  std::vector<double> coords;        // n * det_slots * 4
  std::vector<std::int32_t> labels;  // n * det_slots
  std::vector<double> scores;        // n * det_slots
  std::vector<std::uint8_t> discard_mask;  // n * det_slots

  std::size_t slot(int i, int j) const {
    return static_cast<std::size_t>(i) * det_slots + j;
  }
  const double* box_at(int i, int j) const { return &coords[slot(i, j) * 4]; }
};

/// Per-detection category codes for one batch.
enum : std::uint8_t {
  kCategoryIgnored = 0,
  kCategoryFalsePositive = 1,
  kCategoryTruePositive = 2,
};

struct CategoryMatrix {
  int image_count = 0;
  int det_slots = 0;
  std::vector<std::uint8_t> values;  // n * det_slots, codes 0/1/2

  std::uint8_t at(int i, int j) const {
    return values[static_cast<std::size_t>(i) * det_slots + j];
  }
};

enum class ApMethod {
  kTrapezoidEveryPoint,
  kStepEveryPoint,
  kRecallLevels,
};

std::string to_string(ApMethod method);
ApMethod ap_method_from_string(const std::string& name);  // throws ConfigError

/// The 11-point grid {0.0, 0.1, ..., 1.0}.
std::vector<double> default_recall_levels();

struct EvalConfig {
  int class_count = 0;  // k
  std::vector<double> iou_thresholds{0.5};
  ApMethod ap_method = ApMethod::kTrapezoidEveryPoint;
  std::vector<double> recall_levels = default_recall_levels();
  double epsilon = 1e-9;        // denominator guard for precision
  int max_dets_per_image = 0;   // m; 0 = use each batch's maximum
  int max_gts_per_image = 0;    // m-hat; 0 = use each batch's maximum
  int batch_size = 32;          // n

  void validate() const;  // throws ConfigError on any bad field
};

/// Growable store of categorized detections plus the per-class easy-GT counts
/// that form the recall denominators. Single-writer; concurrent consumers own
/// private accumulators and merge them.
struct Accumulator {
  std::vector<std::int64_t> easy_gt_counts;  // z-hat, length k

  // Parallel arrays, one entry per extracted (TP or FP) detection.
  std::vector<std::int32_t> labels;
  std::vector<double> scores;
  std::vector<std::uint8_t> tp_flags;        // 1 = TP, 0 = FP
  // Sort tie-break keys: entries are ordered by score desc, then image asc,
  // then detection index asc, which makes every downstream result independent
  // of batch order and batch partitioning.
  std::vector<std::int64_t> image_indices;
  std::vector<std::int32_t> det_indices;

  Accumulator() = default;
  explicit Accumulator(std::vector<std::int64_t> easy_counts)
      : easy_gt_counts(std::move(easy_counts)) {}

  int class_count() const { return static_cast<int>(easy_gt_counts.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
};

/// Precision/recall matrices over the globally score-sorted detections.
/// Row c holds class c's cumulative precision and recall at every column;
/// columns owned by other classes repeat the previous cumulative value.
/// `sorted_labels` records which class owns each column.
struct PrCurves {
  int class_count = 0;
  std::int64_t length = 0;  // z, total non-ignored detections

  std::vector<double> precision;  // class_count * length, row-major
  std::vector<double> recall;
  std::vector<std::int32_t> sorted_labels;   // length z
  std::vector<std::int64_t> easy_gt_counts;  // z-hat

  double precision_at(int c, std::int64_t j) const {
    return precision[static_cast<std::size_t>(c) * length + j];
  }
  double recall_at(int c, std::int64_t j) const {
    return recall[static_cast<std::size_t>(c) * length + j];
  }
};

/// Checks every type invariant of a ground-truth record: equal list lengths,
/// valid boxes, labels in [0, class_count). Pass class_count < 0 to skip the
/// upper label bound (used while the class count is still being inferred).
void validate_image_record(const ImageGroundTruth& record, int class_count = -1);

/// Detection variant: additionally checks scores in [0, 1].
void validate_image_record(const ImageDetections& record, int class_count = -1);

}  // namespace mapeval

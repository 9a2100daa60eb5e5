#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mapeval/types.hpp"

namespace mapeval {

/// A full, aligned evaluation input: ground_truth[i] and detections[i] refer
/// to the same image. Images without a detection record get an empty one.
struct Dataset {
  std::vector<ImageGroundTruth> ground_truth;
  std::vector<ImageDetections> detections;

  std::int64_t image_count() const {
    return static_cast<std::int64_t>(ground_truth.size());
  }

  /// Joins parsed records: ground-truth order defines the image index order,
  /// detection records attach by image_id. Throws ValidationError for
  /// detections naming an unknown image.
  static Dataset build(std::vector<ImageGroundTruth> gt,
                       std::vector<ImageDetections> det);

  /// Re-checks every record against a now-known class count.
  void validate(int class_count) const;

  /// 1 + max label over both sides, or 0 when no record carries a label.
  int inferred_class_count() const;
};

// Line-delimited interchange readers. One record per line; records are
// validated structurally (label upper bounds are checked later once the class
// count is known). Errors carry the 1-based line number.
std::vector<ImageGroundTruth> parse_ground_truth(std::istream& in);
std::vector<ImageDetections> parse_detections(std::istream& in);

// Writers producing the same line format; parse(serialize(x)) == x.
void serialize_ground_truth(const std::vector<ImageGroundTruth>& records, std::ostream& out);
void serialize_detections(const std::vector<ImageDetections>& records, std::ostream& out);

/// Per-class count of non-difficult ground-truth boxes (the recall denominators).
std::vector<std::int64_t> count_easy_gt(const Dataset& dataset, int class_count);

/// Packs images into fixed-shape arrays with gt_slots slots per image.
/// Padded slots get a zero box, kPadLabel, and ignore_mask = 1; real slots
/// copy the difficult flag into ignore_mask. Throws if an image holds more
/// than gt_slots boxes.
PaddedGtBatch pad_gt_batch(const std::vector<ImageGroundTruth>& images, int gt_slots);

/// Detection counterpart: padded slots get score 0 and discard_mask = 1.
DetBatch build_det_batch(const std::vector<ImageDetections>& images, int det_slots);

/// Half-open image index range of one mini-batch.
struct BatchRange {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  std::int64_t size() const { return end - begin; }
};

/// Splits [0, g) into ceil(g / batch_size) ranges in image order; the last
/// range may be smaller. g = 0 gives an empty list.
std::vector<BatchRange> batch_ranges(std::int64_t image_count, int batch_size);

/// Materializes the fixed-shape pair for one range. Slot counts come from the
/// config (0 = this batch's maximum, the default that minimizes padding).
struct BatchPair {
  DetBatch det;
  PaddedGtBatch gt;
};
BatchPair make_batch(const Dataset& dataset, const BatchRange& range,
                     const EvalConfig& config);

/// Pull-style iteration over all mini-batches of a dataset.
class BatchIterator {
 public:
  BatchIterator(const Dataset& dataset, const EvalConfig& config)
      : dataset_(dataset), config_(config),
        ranges_(batch_ranges(dataset.image_count(), config.batch_size)) {}

  bool done() const { return next_ >= ranges_.size(); }
  BatchPair next() { return make_batch(dataset_, ranges_[next_++], config_); }
  std::size_t batch_count() const { return ranges_.size(); }

 private:
  const Dataset& dataset_;
  const EvalConfig& config_;
  std::vector<BatchRange> ranges_;
  std::size_t next_ = 0;
};

}  // namespace mapeval

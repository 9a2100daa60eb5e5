#pragma once

#include <cstdint>
#include <vector>

#include "mapeval/types.hpp"

namespace mapeval {

/// All-pairs IoU values for one mini-batch: values[i, j, jh] is the overlap
/// of detection j with ground-truth slot jh in image i.
struct IouCube {
  int image_count = 0;
  int det_slots = 0;  // m
  int gt_slots = 0;   // m-hat
  std::vector<double> values;  // n * m * m-hat, row-major

  std::size_t index(int i, int j, int jh) const {
    return (static_cast<std::size_t>(i) * det_slots + j) * gt_slots + jh;
  }
  double at(int i, int j, int jh) const { return values[index(i, j, jh)]; }
};

/// IoU of two boxes under the inclusive +1 pixel convention:
///   w = max(0, min(xmax, xmax') - max(xmin, xmin') + 1), h analogous,
///   iou = w*h / (area + area' - w*h).
double box_iou(const Box& a, const Box& b);

/// Computes every detection/ground-truth IoU in the batch with the same
/// convention as box_iou. Throws std::invalid_argument when the batches
/// disagree on image count.
IouCube pairwise_iou(const DetBatch& det, const PaddedGtBatch& gt);

/// Zeroes invalid entries in place: pairs with different class labels, and
/// every row of a discarded detection. Padded ground-truth slots are already
/// rejected by the label mismatch (they carry kPadLabel). Note this
/// intentionally leaves discarded detections looking like below-threshold
/// ones; categorize_below resets them to ignored.
void filter_iou(IouCube& iou, const DetBatch& det, const PaddedGtBatch& gt);

/// First categorization pass over a filtered cube: detections whose best IoU
/// is <= t become false positives, then discarded detections are reset to
/// ignored. Everything else stays 0 for the second pass.
CategoryMatrix categorize_below(const IouCube& iou, const DetBatch& det, double threshold);

/// Second pass for detections above the threshold. Per image: IoUs against
/// ignore-masked ground truth (difficult or padded) are dropped, each
/// remaining detection claims its best ground-truth slot, rows are ranked by
/// score (ties by original index), and per slot the claimant with the lowest
/// rank code becomes the true positive; other claimants stay false positives.
/// Rank codes run 1..m and `sentinel` (> m, default m + 1) fills non-claims so
/// the winner is a plain minimum. Results land in original detection order.
/// Throws std::invalid_argument when sentinel <= m.
void categorize_above(CategoryMatrix& d, const IouCube& iou, const DetBatch& det,
                      const PaddedGtBatch& gt, double threshold,
                      std::int64_t sentinel = -1);

/// The three per-detection reductions categorization actually consumes, all
/// threshold-independent: the filtered row maximum, and the best value and
/// first-maximum slot over non-ignored ground truth.
struct MatchReductions {
  int image_count = 0;
  int det_slots = 0;
  int gt_slots = 0;
  std::vector<double> max_filtered;    // n * m
  std::vector<double> best_easy;       // n * m
  std::vector<std::int32_t> arg_easy;  // n * m

  std::size_t slot(int i, int j) const {
    return static_cast<std::size_t>(i) * det_slots + j;
  }
};

/// Computes the reductions without materializing the n*m*m-hat cube: one
/// ground-truth scan per detection, IoU evaluated only on label matches.
/// Discarded detections reduce to zeros, exactly like their filtered cube
/// row. Equivalent by construction to pairwise_iou + filter_iou followed by
/// row reductions; a property test holds the two forms together.
MatchReductions reduce_batch(const DetBatch& det, const PaddedGtBatch& gt);

/// categorize_below + categorize_above fused over precomputed reductions.
/// Produces the identical category matrix to the two-pass cube chain; this is
/// the form the evaluation driver runs per threshold.
CategoryMatrix categorize_reduced(const MatchReductions& red, const DetBatch& det,
                                  double threshold, std::int64_t sentinel = -1);

}  // namespace mapeval

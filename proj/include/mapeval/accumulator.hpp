#pragma once

#include <cstdint>
#include <vector>

#include "mapeval/types.hpp"

namespace mapeval {

/// Appends every non-ignored detection of the batch to the accumulator as
/// (label, score, category - 1), in row-major slot order. The stored image
/// index is det.first_image plus the row, so entries carry a dataset-global
/// position for the deterministic sort in compute_pr.
void extract(Accumulator& acc, const CategoryMatrix& d, const DetBatch& det);

/// Concatenates two accumulators built from disjoint batches of the same
/// dataset. Throws ConfigError when class counts or easy-GT counts disagree.
Accumulator merge(const Accumulator& a, const Accumulator& b);

/// Sorts all extracted detections by score descending (ties: image index,
/// then detection index ascending) and builds the per-class cumulative
/// precision/recall matrices:
///   P[c] = cumsum(tp_c) / max(cumsum(tp_c) + cumsum(fp_c), epsilon)
///   Q[c] = cumsum(tp_c) / easy_gt_counts[c]
/// A class with no easy ground truth gets recall 0 everywhere.
PrCurves compute_pr(const Accumulator& acc, int class_count, double epsilon);

/// The same curves in compact form: per class, only its own points (the
/// columns where the class's cumulative sums move), in the same global
/// order. Element for element equal to class_precision / class_recall of
/// compute_pr's output, without materializing the class_count * z matrices;
/// this is what the evaluation driver feeds to the AP methods.
struct ClassCurves {
  int class_count = 0;
  std::int64_t length = 0;  // total points across classes = z
  std::vector<std::vector<double>> precision;
  std::vector<std::vector<double>> recall;
  std::vector<std::int64_t> easy_gt_counts;
};
ClassCurves compute_class_curves(const Accumulator& acc, int class_count,
                                 double epsilon);

/// Per-class TP / FP totals of everything extracted so far.
struct CategoryTotals {
  std::vector<std::int64_t> tp;
  std::vector<std::int64_t> fp;
};
CategoryTotals category_totals(const Accumulator& acc, int class_count);

/// Row of `curves` restricted to the columns class c owns, i.e. the class's
/// own precision-recall sequence without frozen foreign columns.
std::vector<double> class_precision(const PrCurves& curves, int c);
std::vector<double> class_recall(const PrCurves& curves, int c);

}  // namespace mapeval

#include "mapeval/matcher.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <utility>

namespace mapeval {

double box_iou(const Box& a, const Box& b) {
  const double w = std::max(0.0, std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin) + 1.0);
  const double h = std::max(0.0, std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin) + 1.0);
  const double inter = w * h;
  return inter / (a.area() + b.area() - inter);
}

IouCube pairwise_iou(const DetBatch& det, const PaddedGtBatch& gt) {
  if (det.image_count != gt.image_count) {
    throw std::invalid_argument("pairwise_iou: mismatched batch sizes (" +
                                std::to_string(det.image_count) + " vs " +
                                std::to_string(gt.image_count) + ")");
  }
  const int n = det.image_count;
  const int m = det.det_slots;
  const int mh = gt.gt_slots;

  IouCube cube;
  cube.image_count = n;
  cube.det_slots = m;
  cube.gt_slots = mh;
  cube.values.assign(static_cast<std::size_t>(n) * m * mh, 0.0);

#pragma omp parallel
  {
    // Per-image ground-truth coordinates, split per component so the inner
    // loop runs over contiguous arrays.
    std::vector<double> gx0(mh), gy0(mh), gx1(mh), gy1(mh), garea(mh);

#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) {
      for (int jh = 0; jh < mh; ++jh) {
        const double* g = gt.box_at(i, jh);
        gx0[jh] = g[0];
        gy0[jh] = g[1];
        gx1[jh] = g[2];
        gy1[jh] = g[3];
        garea[jh] = (g[2] - g[0] + 1.0) * (g[3] - g[1] + 1.0);
      }
      for (int j = 0; j < m; ++j) {
        const double* b = det.box_at(i, j);
        const double bx0 = b[0], by0 = b[1], bx1 = b[2], by1 = b[3];
        const double barea = (bx1 - bx0 + 1.0) * (by1 - by0 + 1.0);
        double* out = &cube.values[cube.index(i, j, 0)];
        for (int jh = 0; jh < mh; ++jh) {
          const double w = std::max(0.0, std::min(bx1, gx1[jh]) - std::max(bx0, gx0[jh]) + 1.0);
          const double h = std::max(0.0, std::min(by1, gy1[jh]) - std::max(by0, gy0[jh]) + 1.0);
          const double inter = w * h;
          out[jh] = inter / (barea + garea[jh] - inter);
        }
      }
    }
  }
  return cube;
}

void filter_iou(IouCube& iou, const DetBatch& det, const PaddedGtBatch& gt) {
  const int n = iou.image_count;
  const int m = iou.det_slots;
  const int mh = iou.gt_slots;

#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double* row = &iou.values[iou.index(i, j, 0)];
      if (det.discard_mask[det.slot(i, j)]) {
        std::fill(row, row + mh, 0.0);
        continue;
      }
      const std::int32_t label = det.labels[det.slot(i, j)];
      for (int jh = 0; jh < mh; ++jh) {
        if (gt.labels[gt.slot(i, jh)] != label) {
          row[jh] = 0.0;
        }
      }
    }
  }
}

CategoryMatrix categorize_below(const IouCube& iou, const DetBatch& det,
                                double threshold) {
  const int n = iou.image_count;
  const int m = iou.det_slots;
  const int mh = iou.gt_slots;

  CategoryMatrix d;
  d.image_count = n;
  d.det_slots = m;
  d.values.assign(static_cast<std::size_t>(n) * m, kCategoryIgnored);

#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double* row = &iou.values[iou.index(i, j, 0)];
      double best = 0.0;
      for (int jh = 0; jh < mh; ++jh) {
        best = std::max(best, row[jh]);
      }
      const std::size_t s = det.slot(i, j);
      if (best <= threshold && !det.discard_mask[s]) {
        d.values[s] = kCategoryFalsePositive;
      }
    }
  }
  return d;
}

namespace {

// Scratch arrays for the per-image ranking step, reused across images.
struct RankScratch {
  // Claimants in score order: (complemented score bits, index). Scores are
  // validated non-negative, so the complemented IEEE pattern sorts descending
  // by score with ties falling to the original index.
  std::vector<std::pair<std::uint64_t, std::int32_t>> order;
  std::vector<std::int64_t> winner;  // per GT slot, winning det index or sentinel
};

std::int64_t resolve_sentinel(std::int64_t sentinel, int det_slots) {
  if (sentinel < 0) {
    return static_cast<std::int64_t>(det_slots) + 1;
  }
  if (sentinel <= det_slots) {
    throw std::invalid_argument("sentinel must exceed the detection slot count " +
                                std::to_string(det_slots));
  }
  return sentinel;
}

// Ranking step shared by the cube path and the fused path. Conceptually every
// slot gets a rank code 1..m along the score-sorted axis (ties broken by
// original index) and the claimant with the minimum code per GT slot wins.
// Only claimants can win, and their relative order within the full ranking
// equals their relative order among themselves, so it is enough to sort the
// claimants: the first one touching a GT slot is its winner. The sentinel
// exceeds every detection index and stands in for "no claimant yet". Winners
// become TP, losing claimants FP.
void assign_ranked(std::uint8_t* drow, const double* scores,
                   const std::vector<std::uint8_t>& claims,
                   const std::vector<std::int32_t>& claimed_gt, int m, int mh,
                   std::int64_t sentinel, RankScratch& scratch) {
  scratch.order.clear();
  for (std::int32_t j = 0; j < m; ++j) {
    if (claims[j]) {
      const double s = scores[j] + 0.0;  // -0.0 and +0.0 must rank equal
      std::uint64_t bits;
      static_assert(sizeof bits == sizeof s);
      std::memcpy(&bits, &s, sizeof bits);
      scratch.order.emplace_back(~bits, j);
    }
  }
  std::sort(scratch.order.begin(), scratch.order.end());

  scratch.winner.assign(mh, sentinel);
  for (const auto& [key, j] : scratch.order) {
    std::int64_t& w = scratch.winner[claimed_gt[j]];
    if (w == sentinel) {
      w = j;
    }
  }
  for (const auto& [key, j] : scratch.order) {
    drow[j] = (scratch.winner[claimed_gt[j]] == j) ? kCategoryTruePositive
                                                   : kCategoryFalsePositive;
  }
}

}  // namespace

void categorize_above(CategoryMatrix& d, const IouCube& iou, const DetBatch& det,
                      const PaddedGtBatch& gt, double threshold,
                      std::int64_t sentinel) {
  const int n = iou.image_count;
  const int m = iou.det_slots;
  const int mh = iou.gt_slots;
  sentinel = resolve_sentinel(sentinel, m);

#pragma omp parallel
  {
    std::vector<std::uint8_t> claims(m);      // V: best ignore-free IoU > t
    std::vector<std::int32_t> claimed_gt(m);  // J: argmax slot (first maximum)
    RankScratch scratch;

#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        const double* row = &iou.values[iou.index(i, j, 0)];
        double best = 0.0;
        std::int32_t arg = 0;
        for (int jh = 0; jh < mh; ++jh) {
          if (gt.ignore_mask[gt.slot(i, jh)]) {
            continue;  // difficult or padded: treated as IoU 0
          }
          if (row[jh] > best) {
            best = row[jh];
            arg = jh;
          }
        }
        claims[j] = best > threshold ? 1 : 0;
        claimed_gt[j] = arg;
      }

      assign_ranked(&d.values[static_cast<std::size_t>(i) * m],
                    &det.scores[det.slot(i, 0)], claims, claimed_gt, m, mh,
                    sentinel, scratch);
    }
  }
}

MatchReductions reduce_batch(const DetBatch& det, const PaddedGtBatch& gt) {
  if (det.image_count != gt.image_count) {
    throw std::invalid_argument("reduce_batch: mismatched batch sizes (" +
                                std::to_string(det.image_count) + " vs " +
                                std::to_string(gt.image_count) + ")");
  }
  const int n = det.image_count;
  const int m = det.det_slots;
  const int mh = gt.gt_slots;

  MatchReductions red;
  red.image_count = n;
  red.det_slots = m;
  red.gt_slots = mh;
  const std::size_t cells = static_cast<std::size_t>(n) * m;
  red.max_filtered.assign(cells, 0.0);
  red.best_easy.assign(cells, 0.0);
  red.arg_easy.assign(cells, 0);

#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const std::size_t s = det.slot(i, j);
      if (det.discard_mask[s]) {
        continue;  // a filtered cube row of zeros
      }
      const double* b = det.box_at(i, j);
      const Box dbox{b[0], b[1], b[2], b[3]};
      const std::int32_t label = det.labels[s];
      double max_all = 0.0;
      double best = 0.0;
      std::int32_t arg = 0;
      for (int jh = 0; jh < mh; ++jh) {
        const std::size_t gs = gt.slot(i, jh);
        if (gt.labels[gs] != label) {
          continue;  // label mismatch (or padded slot): filtered to 0
        }
        const double* g = gt.box_at(i, jh);
        const double v = box_iou(dbox, Box{g[0], g[1], g[2], g[3]});
        max_all = std::max(max_all, v);
        if (!gt.ignore_mask[gs] && v > best) {
          best = v;
          arg = jh;
        }
      }
      red.max_filtered[s] = max_all;
      red.best_easy[s] = best;
      red.arg_easy[s] = arg;
    }
  }
  return red;
}

CategoryMatrix categorize_reduced(const MatchReductions& red, const DetBatch& det,
                                  double threshold, std::int64_t sentinel) {
  const int n = red.image_count;
  const int m = red.det_slots;
  sentinel = resolve_sentinel(sentinel, m);

  CategoryMatrix d;
  d.image_count = n;
  d.det_slots = m;
  d.values.assign(static_cast<std::size_t>(n) * m, kCategoryIgnored);

#pragma omp parallel
  {
    std::vector<std::uint8_t> claims(m);
    std::vector<std::int32_t> claimed_gt(m);
    RankScratch scratch;

#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) {
      std::uint8_t* drow = &d.values[static_cast<std::size_t>(i) * m];
      for (int j = 0; j < m; ++j) {
        const std::size_t s = red.slot(i, j);
        if (red.max_filtered[s] <= threshold && !det.discard_mask[s]) {
          drow[j] = kCategoryFalsePositive;
        }
        claims[j] = red.best_easy[s] > threshold ? 1 : 0;
        claimed_gt[j] = red.arg_easy[s];
      }
      assign_ranked(drow, &det.scores[det.slot(i, 0)], claims, claimed_gt, m,
                    red.gt_slots, sentinel, scratch);
    }
  }
  return d;
}

}  // namespace mapeval

#include "mapeval/accumulator.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

namespace mapeval {

void extract(Accumulator& acc, const CategoryMatrix& d, const DetBatch& det) {
  const int n = d.image_count;
  const int m = d.det_slots;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const std::uint8_t code = d.values[static_cast<std::size_t>(i) * m + j];
      if (code == kCategoryIgnored) {
        continue;
      }
      const std::size_t s = det.slot(i, j);
      acc.labels.push_back(det.labels[s]);
      acc.scores.push_back(det.scores[s]);
      acc.tp_flags.push_back(static_cast<std::uint8_t>(code - 1));
      acc.image_indices.push_back(det.first_image + i);
      acc.det_indices.push_back(j);
    }
  }
}

Accumulator merge(const Accumulator& a, const Accumulator& b) {
  if (a.easy_gt_counts != b.easy_gt_counts) {
    throw ConfigError("cannot merge accumulators with different easy-GT counts");
  }
  Accumulator out(a.easy_gt_counts);
  auto append = [&out](const Accumulator& src) {
    out.labels.insert(out.labels.end(), src.labels.begin(), src.labels.end());
    out.scores.insert(out.scores.end(), src.scores.begin(), src.scores.end());
    out.tp_flags.insert(out.tp_flags.end(), src.tp_flags.begin(), src.tp_flags.end());
    out.image_indices.insert(out.image_indices.end(), src.image_indices.begin(),
                             src.image_indices.end());
    out.det_indices.insert(out.det_indices.end(), src.det_indices.begin(),
                           src.det_indices.end());
  };
  append(a);
  append(b);
  return out;
}

namespace {

// Packed sort key implementing the total order (score desc, image asc,
// detection asc) with two integer compares. Scores are validated
// non-negative, so their IEEE bit patterns order like the values; the
// complement flips that to descending (-0.0 is normalized to +0.0 first).
struct SortKey {
  std::uint64_t score_desc;
  std::uint64_t position;
  std::int64_t index;

  bool operator<(const SortKey& other) const {
    if (score_desc != other.score_desc) return score_desc < other.score_desc;
    return position < other.position;
  }
};

std::vector<SortKey> sorted_keys(const Accumulator& acc) {
  const std::int64_t z = acc.size();
  std::vector<SortKey> keys(z);
  bool packable = true;
  for (std::int64_t i = 0; i < z; ++i) {
    const double score = acc.scores[i] + 0.0;
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof score);
    std::memcpy(&bits, &score, sizeof bits);
    keys[i].score_desc = ~bits;
    keys[i].position = (static_cast<std::uint64_t>(acc.image_indices[i]) << 20) |
                       static_cast<std::uint32_t>(acc.det_indices[i]);
    keys[i].index = i;
    packable = packable && acc.det_indices[i] < (1 << 20);
  }
  if (!packable) {
    // An image with a million detection slots cannot share the packed word;
    // sort on the raw fields instead.
    std::sort(keys.begin(), keys.end(), [&acc](const SortKey& a, const SortKey& b) {
      if (acc.scores[a.index] != acc.scores[b.index])
        return acc.scores[a.index] > acc.scores[b.index];
      if (acc.image_indices[a.index] != acc.image_indices[b.index])
        return acc.image_indices[a.index] < acc.image_indices[b.index];
      return acc.det_indices[a.index] < acc.det_indices[b.index];
    });
    return keys;
  }

  // Keys are pairwise distinct (an (image, detection) pair is extracted at
  // most once), so any correct sort yields the one total order. Large inputs
  // get a counting pass first: scores live in [0, 1], so a linear bucket index
  // on the clamped score partitions the keys in descending-score order far
  // more evenly than the raw exponent bits would, and each bucket is finished
  // with std::sort on the full key. Clamping keeps any out-of-range score
  // valid here; it merely lands in an end bucket and the full-key sort inside
  // the bucket still orders it correctly.
  constexpr std::size_t kBuckets = std::size_t{1} << 16;
  if (z >= 4096) {
    std::vector<std::uint16_t> bucket_of(z);
    for (std::int64_t i = 0; i < z; ++i) {
      const double s = std::min(std::max(acc.scores[i], 0.0), 1.0);
      bucket_of[i] = static_cast<std::uint16_t>((1.0 - s) * (kBuckets - 1));
    }
    std::vector<std::int64_t> counts(kBuckets + 1, 0);
    for (std::int64_t i = 0; i < z; ++i) {
      ++counts[bucket_of[i] + 1];
    }
    for (std::size_t b = 1; b <= kBuckets; ++b) {
      counts[b] += counts[b - 1];
    }
    std::vector<SortKey> scattered(z);
    std::vector<std::int64_t> next(counts.begin(), counts.end() - 1);
    for (std::int64_t i = 0; i < z; ++i) {
      scattered[next[bucket_of[i]]++] = keys[i];
    }
    for (std::size_t b = 0; b < kBuckets; ++b) {
      if (counts[b + 1] - counts[b] > 1) {
        std::sort(scattered.begin() + counts[b], scattered.begin() + counts[b + 1]);
      }
    }
    return scattered;
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace

PrCurves compute_pr(const Accumulator& acc, int class_count, double epsilon) {
  const std::int64_t z = acc.size();
  const std::vector<SortKey> keys = sorted_keys(acc);

  PrCurves curves;
  curves.class_count = class_count;
  curves.length = z;
  curves.easy_gt_counts = acc.easy_gt_counts;
  if (curves.easy_gt_counts.empty()) {
    curves.easy_gt_counts.assign(class_count, 0);
  }
  curves.sorted_labels.resize(z);
  for (std::int64_t j = 0; j < z; ++j) {
    curves.sorted_labels[j] = acc.labels[keys[j].index];
  }
  curves.precision.assign(static_cast<std::size_t>(class_count) * z, 0.0);
  curves.recall.assign(static_cast<std::size_t>(class_count) * z, 0.0);

  // Columns of other classes freeze the previous cumulative value, so each
  // row is a handful of steps separated by long constant runs; the runs are
  // written with std::fill rather than element by element.
  std::vector<std::vector<std::int64_t>> own_columns(class_count);
  for (std::int64_t j = 0; j < z; ++j) {
    own_columns[curves.sorted_labels[j]].push_back(j);
  }

#pragma omp parallel for schedule(static)
  for (int c = 0; c < class_count; ++c) {
    double* prow = &curves.precision[static_cast<std::size_t>(c) * z];
    double* qrow = &curves.recall[static_cast<std::size_t>(c) * z];
    const std::int64_t easy = curves.easy_gt_counts[c];
    std::int64_t cum_tp = 0;
    std::int64_t cum_fp = 0;
    std::int64_t filled = 0;  // columns [0, filled) are final
    double p = 0.0, q = 0.0;
    for (const std::int64_t j : own_columns[c]) {
      std::fill(prow + filled, prow + j, p);
      std::fill(qrow + filled, qrow + j, q);
      if (acc.tp_flags[keys[j].index]) {
        ++cum_tp;
      } else {
        ++cum_fp;
      }
      p = static_cast<double>(cum_tp) /
          std::max(static_cast<double>(cum_tp + cum_fp), epsilon);
      q = easy > 0 ? static_cast<double>(cum_tp) / static_cast<double>(easy) : 0.0;
      prow[j] = p;
      qrow[j] = q;
      filled = j + 1;
    }
    std::fill(prow + filled, prow + z, p);
    std::fill(qrow + filled, qrow + z, q);
  }
  return curves;
}

ClassCurves compute_class_curves(const Accumulator& acc, int class_count,
                                 double epsilon) {
  const std::vector<SortKey> keys = sorted_keys(acc);

  ClassCurves curves;
  curves.class_count = class_count;
  curves.length = acc.size();
  curves.precision.resize(class_count);
  curves.recall.resize(class_count);
  curves.easy_gt_counts = acc.easy_gt_counts;
  if (curves.easy_gt_counts.empty()) {
    curves.easy_gt_counts.assign(class_count, 0);
  }

  std::vector<std::int64_t> cum_tp(class_count, 0);
  std::vector<std::int64_t> cum_fp(class_count, 0);
  for (const auto& key : keys) {
    const std::int32_t c = acc.labels[key.index];
    if (acc.tp_flags[key.index]) {
      ++cum_tp[c];
    } else {
      ++cum_fp[c];
    }
    curves.precision[c].push_back(
        static_cast<double>(cum_tp[c]) /
        std::max(static_cast<double>(cum_tp[c] + cum_fp[c]), epsilon));
    curves.recall[c].push_back(curves.easy_gt_counts[c] > 0
                                   ? static_cast<double>(cum_tp[c]) /
                                         static_cast<double>(curves.easy_gt_counts[c])
                                   : 0.0);
  }
  return curves;
}

CategoryTotals category_totals(const Accumulator& acc, int class_count) {
  CategoryTotals totals;
  totals.tp.assign(class_count, 0);
  totals.fp.assign(class_count, 0);
  for (std::int64_t i = 0; i < acc.size(); ++i) {
    if (acc.tp_flags[i]) {
      ++totals.tp[acc.labels[i]];
    } else {
      ++totals.fp[acc.labels[i]];
    }
  }
  return totals;
}

std::vector<double> class_precision(const PrCurves& curves, int c) {
  std::vector<double> out;
  for (std::int64_t j = 0; j < curves.length; ++j) {
    if (curves.sorted_labels[j] == c) {
      out.push_back(curves.precision_at(c, j));
    }
  }
  return out;
}

std::vector<double> class_recall(const PrCurves& curves, int c) {
  std::vector<double> out;
  for (std::int64_t j = 0; j < curves.length; ++j) {
    if (curves.sorted_labels[j] == c) {
      out.push_back(curves.recall_at(c, j));
    }
  }
  return out;
}

}  // namespace mapeval

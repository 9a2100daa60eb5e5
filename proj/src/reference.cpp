#include "mapeval/reference.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mapeval {

namespace {

struct PoolEntry {
  std::int64_t image;
  std::int32_t det;
  double score;
};

}  // namespace

SequentialEvaluation sequential_evaluate(const Dataset& dataset, int class_count,
                                         double threshold, double epsilon,
                                         MatchPolicy policy) {
  const std::int64_t g = dataset.image_count();

  SequentialEvaluation result;
  result.precision.resize(class_count);
  result.recall.resize(class_count);
  result.tp_totals.assign(class_count, 0);
  result.fp_totals.assign(class_count, 0);
  result.categories.resize(g);
  for (std::int64_t i = 0; i < g; ++i) {
    result.categories[i].assign(dataset.detections[i].size(), kCategoryIgnored);
  }

  const auto easy_counts = count_easy_gt(dataset, class_count);

  // Matched flags per ground-truth box, shared across the class loop; a box
  // only ever meets detections of its own class.
  std::vector<std::vector<std::uint8_t>> matched(g);
  for (std::int64_t i = 0; i < g; ++i) {
    matched[i].assign(dataset.ground_truth[i].size(), 0);
  }

  for (std::int32_t c = 0; c < class_count; ++c) {
    std::vector<PoolEntry> pool;
    for (std::int64_t i = 0; i < g; ++i) {
      const auto& dets = dataset.detections[i];
      for (std::size_t j = 0; j < dets.size(); ++j) {
        if (dets.labels[j] == c && !dets.discarded[j]) {
          pool.push_back({i, static_cast<std::int32_t>(j), dets.scores[j]});
        }
      }
    }
    std::sort(pool.begin(), pool.end(), [](const PoolEntry& a, const PoolEntry& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.image != b.image) return a.image < b.image;
      return a.det < b.det;
    });

    std::vector<std::uint8_t> tp(pool.size(), 0);
    std::vector<std::uint8_t> fp(pool.size(), 0);

    for (std::size_t p = 0; p < pool.size(); ++p) {
      const auto& entry = pool[p];
      const auto& gts = dataset.ground_truth[entry.image];
      const Box& b = dataset.detections[entry.image].boxes[entry.det];
      const double area = (b.xmax - b.xmin + 1.0) * (b.ymax - b.ymin + 1.0);

      double best_all = 0.0;
      std::int64_t arg_all = -1;
      double best_easy = 0.0;
      std::int64_t arg_easy = -1;
      for (std::size_t jh = 0; jh < gts.size(); ++jh) {
        if (gts.labels[jh] != c) {
          continue;
        }
        const Box& gb = gts.boxes[jh];
        const double w = std::max(0.0, std::min(b.xmax, gb.xmax) - std::max(b.xmin, gb.xmin) + 1.0);
        const double h = std::max(0.0, std::min(b.ymax, gb.ymax) - std::max(b.ymin, gb.ymin) + 1.0);
        const double inter = w * h;
        const double gt_area = (gb.xmax - gb.xmin + 1.0) * (gb.ymax - gb.ymin + 1.0);
        const double iou = inter / (area + gt_area - inter);
        if (arg_all < 0 || iou > best_all) {
          best_all = iou;
          arg_all = static_cast<std::int64_t>(jh);
        }
        if (!gts.difficult[jh] && (arg_easy < 0 || iou > best_easy)) {
          best_easy = iou;
          arg_easy = static_cast<std::int64_t>(jh);
        }
      }

      std::uint8_t code = kCategoryIgnored;
      if (policy == MatchPolicy::kBestOverlapOverall) {
        if (arg_all >= 0 && best_all > threshold) {
          if (!gts.difficult[arg_all]) {
            if (!matched[entry.image][arg_all]) {
              code = kCategoryTruePositive;
              matched[entry.image][arg_all] = 1;
            } else {
              code = kCategoryFalsePositive;
            }
          }
          // A detection whose best overlap is difficult stays ignored.
        } else {
          code = kCategoryFalsePositive;
        }
      } else {
        if (arg_easy >= 0 && best_easy > threshold) {
          if (!matched[entry.image][arg_easy]) {
            code = kCategoryTruePositive;
            matched[entry.image][arg_easy] = 1;
          } else {
            code = kCategoryFalsePositive;
          }
        } else if (arg_all >= 0 && best_all > threshold) {
          code = kCategoryIgnored;  // only difficult overlaps clear the bar
        } else {
          code = kCategoryFalsePositive;
        }
      }

      result.categories[entry.image][entry.det] = code;
      if (code == kCategoryTruePositive) tp[p] = 1;
      if (code == kCategoryFalsePositive) fp[p] = 1;
    }

    auto& prec = result.precision[c];
    auto& rec = result.recall[c];
    prec.resize(pool.size());
    rec.resize(pool.size());
    std::int64_t cum_tp = 0;
    std::int64_t cum_fp = 0;
    for (std::size_t p = 0; p < pool.size(); ++p) {
      cum_tp += tp[p];
      cum_fp += fp[p];
      prec[p] = static_cast<double>(cum_tp) /
                std::max(static_cast<double>(cum_tp + cum_fp), epsilon);
      rec[p] = easy_counts[c] > 0
                   ? static_cast<double>(cum_tp) / static_cast<double>(easy_counts[c])
                   : 0.0;
    }
    result.tp_totals[c] = cum_tp;
    result.fp_totals[c] = cum_fp;
  }
  return result;
}

namespace {

/// Deterministic draw helpers over mt19937_64. The standard distributions are
/// implementation-defined, so datasets would not be byte-stable across
/// library versions; these are.
class Draws {
 public:
  explicit Draws(std::uint64_t seed) : engine_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive
    return lo + static_cast<std::int64_t>(engine_() %
                                          static_cast<std::uint64_t>(hi - lo + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

double quantize(double score, int decimals) {
  if (decimals < 0) {
    return score;
  }
  const double scale = std::pow(10.0, decimals);
  return std::round(score * scale) / scale;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (image_count < 0 || class_count < 1) {
    throw ConfigError("synthetic spec needs image_count >= 0 and class_count >= 1");
  }
  if (min_gts_per_image < 0 || max_gts_per_image < min_gts_per_image) {
    throw ConfigError("degenerate GT-per-image range");
  }
  if (min_dets_per_gt < 0 || max_dets_per_gt < min_dets_per_gt) {
    throw ConfigError("degenerate detections-per-GT range");
  }
  for (double p : {difficult_probability, discard_probability}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("probability out of [0, 1]");
    }
  }
  if (!(jitter >= 0.0) || !(false_detections_per_image >= 0.0)) {
    throw ConfigError("jitter and false-detection rate must be non-negative");
  }
  if (canvas_size < 80) {
    throw ConfigError("canvas too small");
  }
}

Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  Draws rng(spec.seed);

  const int max_side = std::min(64, spec.canvas_size / 2);

  std::vector<ImageGroundTruth> gt_records;
  std::vector<ImageDetections> det_records;
  gt_records.reserve(spec.image_count);
  det_records.reserve(spec.image_count);

  for (int i = 0; i < spec.image_count; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "img_%06d", i);

    ImageGroundTruth gt;
    gt.image_id = id;
    ImageDetections det;
    det.image_id = id;

    auto emit_detection = [&](const Box& b, std::int32_t label) {
      det.boxes.push_back(b);
      det.labels.push_back(label);
      det.scores.push_back(quantize(rng.uniform(), spec.score_decimals));
      det.discarded.push_back(rng.bernoulli(spec.discard_probability));
    };

    auto random_box = [&]() {
      const std::int64_t w = rng.uniform_int(4, max_side);
      const std::int64_t h = rng.uniform_int(4, max_side);
      const std::int64_t x = rng.uniform_int(0, spec.canvas_size - w);
      const std::int64_t y = rng.uniform_int(0, spec.canvas_size - h);
      return Box{static_cast<double>(x), static_cast<double>(y),
                 static_cast<double>(x + w - 1), static_cast<double>(y + h - 1)};
    };

    const std::int64_t gt_count =
        rng.uniform_int(spec.min_gts_per_image, spec.max_gts_per_image);
    for (std::int64_t j = 0; j < gt_count; ++j) {
      const Box b = random_box();
      const auto label = static_cast<std::int32_t>(rng.uniform_int(0, spec.class_count - 1));
      gt.boxes.push_back(b);
      gt.labels.push_back(label);
      gt.difficult.push_back(rng.bernoulli(spec.difficult_probability));

      const std::int64_t copies =
          rng.uniform_int(spec.min_dets_per_gt, spec.max_dets_per_gt);
      for (std::int64_t d = 0; d < copies; ++d) {
        Box jittered = b;
        if (spec.jitter > 0.0) {
          auto shift = [&]() { return (rng.uniform() * 2.0 - 1.0) * spec.jitter; };
          jittered.xmin += shift();
          jittered.ymin += shift();
          jittered.xmax += shift();
          jittered.ymax += shift();
          if (jittered.xmin > jittered.xmax) std::swap(jittered.xmin, jittered.xmax);
          if (jittered.ymin > jittered.ymax) std::swap(jittered.ymin, jittered.ymax);
        }
        emit_detection(jittered, label);
      }
    }

    std::int64_t false_count =
        static_cast<std::int64_t>(std::floor(spec.false_detections_per_image));
    const double frac = spec.false_detections_per_image - std::floor(spec.false_detections_per_image);
    if (rng.bernoulli(frac)) {
      ++false_count;
    }
    for (std::int64_t f = 0; f < false_count; ++f) {
      emit_detection(random_box(),
                     static_cast<std::int32_t>(rng.uniform_int(0, spec.class_count - 1)));
    }

    gt_records.push_back(std::move(gt));
    det_records.push_back(std::move(det));
  }

  return Dataset::build(std::move(gt_records), std::move(det_records));
}

}  // namespace mapeval

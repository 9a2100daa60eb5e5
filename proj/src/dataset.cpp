#include "mapeval/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace mapeval {

namespace {

using nlohmann::json;

Box box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw ValidationError("box must be a 4-element [xmin,ymin,xmax,ymax] list");
  }
  return Box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
             j[3].get<double>()};
}

json box_to_json(const Box& b) {
  return json::array({b.xmin, b.ymin, b.xmax, b.ymax});
}

template <typename Record, typename Fn>
std::vector<Record> parse_lines(std::istream& in, Fn parse_one) {
  std::vector<Record> records;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    Record record;
    try {
      const json j = json::parse(line);
      record = parse_one(j);
      validate_image_record(record);
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), line_no);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed line: ") + e.what(), line_no);
    }
    if (!seen_ids.insert(record.image_id).second) {
      throw ValidationError("duplicate image_id '" + record.image_id + "'", line_no);
    }
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace

std::vector<ImageGroundTruth> parse_ground_truth(std::istream& in) {
  return parse_lines<ImageGroundTruth>(in, [](const json& j) {
    ImageGroundTruth rec;
    rec.image_id = j.at("image_id").get<std::string>();
    for (const auto& b : j.at("boxes")) {
      rec.boxes.push_back(box_from_json(b));
    }
    rec.labels = j.at("labels").get<std::vector<std::int32_t>>();
    rec.difficult = j.at("difficult").get<std::vector<bool>>();
    return rec;
  });
}

std::vector<ImageDetections> parse_detections(std::istream& in) {
  return parse_lines<ImageDetections>(in, [](const json& j) {
    ImageDetections rec;
    rec.image_id = j.at("image_id").get<std::string>();
    for (const auto& b : j.at("boxes")) {
      rec.boxes.push_back(box_from_json(b));
    }
    rec.labels = j.at("labels").get<std::vector<std::int32_t>>();
    rec.scores = j.at("scores").get<std::vector<double>>();
    if (j.contains("discarded")) {
      rec.discarded = j.at("discarded").get<std::vector<bool>>();
    } else {
      rec.discarded.assign(rec.boxes.size(), false);
    }
    return rec;
  });
}

void serialize_ground_truth(const std::vector<ImageGroundTruth>& records,
                            std::ostream& out) {
  for (const auto& rec : records) {
    json j;
    j["image_id"] = rec.image_id;
    j["boxes"] = json::array();
    for (const auto& b : rec.boxes) j["boxes"].push_back(box_to_json(b));
    j["labels"] = rec.labels;
    j["difficult"] = rec.difficult;
    out << j.dump() << '\n';
  }
}

void serialize_detections(const std::vector<ImageDetections>& records,
                          std::ostream& out) {
  for (const auto& rec : records) {
    json j;
    j["image_id"] = rec.image_id;
    j["boxes"] = json::array();
    for (const auto& b : rec.boxes) j["boxes"].push_back(box_to_json(b));
    j["labels"] = rec.labels;
    j["scores"] = rec.scores;
    j["discarded"] = rec.discarded;
    out << j.dump() << '\n';
  }
}

Dataset Dataset::build(std::vector<ImageGroundTruth> gt,
                       std::vector<ImageDetections> det) {
  Dataset ds;
  ds.ground_truth = std::move(gt);

  std::unordered_map<std::string, std::int64_t> index;
  index.reserve(ds.ground_truth.size());
  for (std::int64_t i = 0; i < ds.image_count(); ++i) {
    index.emplace(ds.ground_truth[i].image_id, i);
  }

  ds.detections.resize(ds.ground_truth.size());
  for (std::int64_t i = 0; i < ds.image_count(); ++i) {
    ds.detections[i].image_id = ds.ground_truth[i].image_id;
  }
  for (auto& rec : det) {
    auto it = index.find(rec.image_id);
    if (it == index.end()) {
      throw ValidationError("detections for unknown image '" + rec.image_id + "'");
    }
    ds.detections[it->second] = std::move(rec);
  }
  return ds;
}

void Dataset::validate(int class_count) const {
  for (const auto& rec : ground_truth) {
    validate_image_record(rec, class_count);
  }
  for (const auto& rec : detections) {
    validate_image_record(rec, class_count);
  }
}

int Dataset::inferred_class_count() const {
  std::int32_t max_label = -1;
  for (const auto& rec : ground_truth) {
    for (auto l : rec.labels) max_label = std::max(max_label, l);
  }
  for (const auto& rec : detections) {
    for (auto l : rec.labels) max_label = std::max(max_label, l);
  }
  return static_cast<int>(max_label + 1);
}

std::vector<std::int64_t> count_easy_gt(const Dataset& dataset, int class_count) {
  std::vector<std::int64_t> counts(class_count, 0);
  for (const auto& rec : dataset.ground_truth) {
    for (std::size_t j = 0; j < rec.size(); ++j) {
      if (!rec.difficult[j]) {
        ++counts[rec.labels[j]];
      }
    }
  }
  return counts;
}

namespace {

// Box is four contiguous doubles in (xmin, ymin, xmax, ymax) order, exactly
// the row-major coords layout, so whole images copy with one memcpy each.
static_assert(sizeof(Box) == 4 * sizeof(double));

PaddedGtBatch pad_gt_images(const ImageGroundTruth* images, int n, int gt_slots) {
  PaddedGtBatch batch;
  batch.image_count = n;
  batch.gt_slots = gt_slots;
  batch.coords.assign(static_cast<std::size_t>(n) * gt_slots * 4, 0.0);
  batch.labels.assign(static_cast<std::size_t>(n) * gt_slots, kPadLabel);
  batch.ignore_mask.assign(static_cast<std::size_t>(n) * gt_slots, 1);

  for (int i = 0; i < n; ++i) {
    const auto& img = images[i];
    const int count = static_cast<int>(img.size());
    if (count > gt_slots) {
      throw ValidationError("image '" + img.image_id + "' has " +
                            std::to_string(img.size()) + " ground-truth boxes, more than " +
                            std::to_string(gt_slots) + " slots");
    }
    if (count == 0) continue;
    const std::size_t row = static_cast<std::size_t>(i) * gt_slots;
    std::memcpy(&batch.coords[row * 4], img.boxes.data(),
                static_cast<std::size_t>(count) * sizeof(Box));
    std::memcpy(&batch.labels[row], img.labels.data(),
                static_cast<std::size_t>(count) * sizeof(std::int32_t));
    for (int j = 0; j < count; ++j) {
      batch.ignore_mask[row + j] = img.difficult[j] ? 1 : 0;
    }
  }
  return batch;
}

DetBatch build_det_images(const ImageDetections* images, int n, int det_slots) {
  DetBatch batch;
  batch.image_count = n;
  batch.det_slots = det_slots;
  batch.coords.assign(static_cast<std::size_t>(n) * det_slots * 4, 0.0);
  batch.labels.assign(static_cast<std::size_t>(n) * det_slots, kPadLabel);
  batch.scores.assign(static_cast<std::size_t>(n) * det_slots, 0.0);
  batch.discard_mask.assign(static_cast<std::size_t>(n) * det_slots, 1);

  for (int i = 0; i < n; ++i) {
    const auto& img = images[i];
    const int count = static_cast<int>(img.size());
    if (count > det_slots) {
      throw ValidationError("image '" + img.image_id + "' has " +
                            std::to_string(img.size()) + " detections, more than " +
                            std::to_string(det_slots) + " slots");
    }
    if (count == 0) continue;
    const std::size_t row = static_cast<std::size_t>(i) * det_slots;
    std::memcpy(&batch.coords[row * 4], img.boxes.data(),
                static_cast<std::size_t>(count) * sizeof(Box));
    std::memcpy(&batch.labels[row], img.labels.data(),
                static_cast<std::size_t>(count) * sizeof(std::int32_t));
    std::memcpy(&batch.scores[row], img.scores.data(),
                static_cast<std::size_t>(count) * sizeof(double));
    for (int j = 0; j < count; ++j) {
      batch.discard_mask[row + j] = img.discarded[j] ? 1 : 0;
    }
  }
  return batch;
}

}  // namespace

PaddedGtBatch pad_gt_batch(const std::vector<ImageGroundTruth>& images, int gt_slots) {
  if (images.empty()) {
    throw std::invalid_argument("pad_gt_batch requires at least one image");
  }
  return pad_gt_images(images.data(), static_cast<int>(images.size()), gt_slots);
}

DetBatch build_det_batch(const std::vector<ImageDetections>& images, int det_slots) {
  if (images.empty()) {
    throw std::invalid_argument("build_det_batch requires at least one image");
  }
  return build_det_images(images.data(), static_cast<int>(images.size()), det_slots);
}

std::vector<BatchRange> batch_ranges(std::int64_t image_count, int batch_size) {
  std::vector<BatchRange> ranges;
  for (std::int64_t begin = 0; begin < image_count; begin += batch_size) {
    ranges.push_back({begin, std::min(begin + batch_size, image_count)});
  }
  return ranges;
}

BatchPair make_batch(const Dataset& dataset, const BatchRange& range,
                     const EvalConfig& config) {
  if (range.size() <= 0) {
    throw std::invalid_argument("make_batch requires a non-empty range");
  }
  const ImageGroundTruth* gt = dataset.ground_truth.data() + range.begin;
  const ImageDetections* det = dataset.detections.data() + range.begin;
  const int n = static_cast<int>(range.size());

  int gt_slots = config.max_gts_per_image;
  if (gt_slots == 0) {
    for (int i = 0; i < n; ++i) gt_slots = std::max(gt_slots, static_cast<int>(gt[i].size()));
  }
  int det_slots = config.max_dets_per_image;
  if (det_slots == 0) {
    for (int i = 0; i < n; ++i) det_slots = std::max(det_slots, static_cast<int>(det[i].size()));
  }

  BatchPair pair{build_det_images(det, n, det_slots), pad_gt_images(gt, n, gt_slots)};
  pair.det.first_image = range.begin;
  pair.gt.first_image = range.begin;
  return pair;
}

}  // namespace mapeval

#include "rdd/postprocess.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "rdd/errors.hpp"
#include "rdd/geometry.hpp"
#include "text_util.hpp"

namespace rdd {

std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument("nms: IoU threshold must be in (0, 1]");
  }
  std::vector<Detection> kept;
  for (std::size_t i : confidence_order(dets)) {
    const auto& candidate = dets[i];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.label == candidate.label && iou(k.box, candidate.box) >= iou_threshold;
    });
    if (!suppressed) kept.push_back(candidate);
  }
  return kept;
}

DetectionMap nms(const DetectionMap& dets, double iou_threshold) {
  DetectionMap out;
  for (const auto& [image_id, list] : dets) out.emplace(image_id, nms(list, iou_threshold));
  return out;
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int i = 5; i <= 95; ++i) grid.push_back(i / 100.0);
  return grid;
}

ThresholdTable sweep_thresholds(const DatasetSplit& gts, const DetectionMap& dets, std::span<const double> grid,
                                double iou_threshold) {
  if (grid.empty()) throw std::invalid_argument("sweep_thresholds: empty grid");
  for (double t : grid) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("sweep_thresholds: grid value outside [0,1]");
  }

  std::unordered_map<std::string_view, const ImageRecord*> index;
  for (const auto& r : gts.records) index.emplace(r.image_id, &r);
  for (const auto& [image_id, list] : dets) {
    if (!index.contains(image_id)) throw UnknownImage(image_id);
  }

  // Greedy matching walks detections in confidence order, so the detections
  // kept by a threshold are a prefix and their match outcome does not depend
  // on the ones dropped. One matching pass serves every grid value.
  struct Outcome {
    double confidence;
    bool tp;
  };
  std::array<std::vector<Outcome>, kNumClasses> outcomes;
  std::array<std::size_t, kNumClasses> positives{};
  for (const auto& record : gts.records) {
    for (const auto& gt : record.boxes) ++positives[class_index(gt.label)];
    const auto it = dets.find(record.image_id);
    if (it == dets.end()) continue;
    const auto& list = it->second;
    const auto m = match_detections(record.boxes, list, iou_threshold);
    for (std::size_t d = 0; d < list.size(); ++d) {
      outcomes[class_index(list[d].label)].push_back({list[d].confidence, m.detection_to_gt[d] >= 0});
    }
  }

  ThresholdTable table;
  for (ClassLabel label : kAllClasses) {
    const std::size_t c = class_index(label);
    ClassThreshold best{grid[0], -1.0, false};
    for (double t : grid) {
      Counts counts;
      for (const auto& o : outcomes[c]) {
        if (o.confidence < t) continue;
        if (o.tp) {
          ++counts.tp;
        } else {
          ++counts.fp;
        }
      }
      counts.fn = positives[c] - counts.tp;
      const double f1 = precision_recall_f1(counts).f1;
      if (f1 > best.f1 || (f1 == best.f1 && t < best.threshold)) best = {t, f1, false};
    }
    best.degenerate = best.f1 == 0.0;
    table.classes.emplace(label, best);
  }

  EvalOptions options;
  options.iou_threshold = iou_threshold;
  table.pooled_f1 = evaluate(gts, apply_thresholds(dets, table), options).prf.f1;
  return table;
}

std::vector<Detection> apply_thresholds(std::span<const Detection> dets, const ThresholdTable& table) {
  std::vector<Detection> out;
  for (const auto& d : dets) {
    const auto it = table.classes.find(d.label);
    if (it == table.classes.end()) {
      throw Error("threshold table has no entry for class " + std::string(class_name(d.label)));
    }
    if (d.confidence >= it->second.threshold) out.push_back(d);
  }
  return out;
}

DetectionMap apply_thresholds(const DetectionMap& dets, const ThresholdTable& table) {
  DetectionMap out;
  for (const auto& [image_id, list] : dets) out.emplace(image_id, apply_thresholds(list, table));
  return out;
}

std::string format_threshold_table(const ThresholdTable& table) {
  std::string out;
  for (const auto& [label, entry] : table.classes) {
    out += class_name(label);
    out += '=';
    out += detail::format_double(entry.threshold);
    out += '\n';
  }
  return out;
}

ThresholdTable parse_threshold_table(std::string_view text) {
  ThresholdTable table;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected <class>=<threshold>", line_no);
    const auto key = detail::trim(line.substr(0, eq));
    const auto label = class_from_name(key);
    if (!label) throw UnknownClass(std::string(key), line_no);
    const auto value = detail::parse_double(line.substr(eq + 1));
    if (!value || !(*value >= 0.0 && *value <= 1.0)) throw ParseError("threshold must be a number in [0,1]", line_no);
    table.classes[*label] = ClassThreshold{*value, 0.0, false};
  }
  return table;
}

}  // namespace rdd

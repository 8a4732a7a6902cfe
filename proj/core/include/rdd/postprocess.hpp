#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rdd/metrics.hpp"
#include "rdd/types.hpp"

namespace rdd {

inline constexpr double kDefaultNmsIou = 0.5;

/// Per-class greedy NMS. Keeps the highest-confidence remaining detection and
/// drops same-class detections with IoU >= threshold against it. The result
/// is sorted by descending confidence, ties by input order.
std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold = kDefaultNmsIou);

/// nms() applied to each image independently.
DetectionMap nms(const DetectionMap& dets, double iou_threshold = kDefaultNmsIou);

struct ClassThreshold {
  double threshold = 0.0;
  double f1 = 0.0;          // validation F1 of the class at `threshold`
  bool degenerate = false;  // best F1 was 0 (e.g. no detections)
};

struct ThresholdTable {
  std::map<ClassLabel, ClassThreshold> classes;
  /// Pooled F1 over all classes after applying the table.
  double pooled_f1 = 0.0;

  bool covers(ClassLabel label) const noexcept { return classes.contains(label); }
};

/// 0.05, 0.06, ..., 0.95.
std::vector<double> default_threshold_grid();

/// For each class independently, the grid value maximising that class's F1
/// at `iou_threshold`. Ties pick the lowest threshold. Throws
/// std::invalid_argument for an empty grid or values outside [0,1].
ThresholdTable sweep_thresholds(const DatasetSplit& gts, const DetectionMap& dets,
                                std::span<const double> grid,
                                double iou_threshold = kCompetitionIou);

/// Keeps a detection iff confidence >= its class threshold; order preserved.
/// Throws Error when a detection's class is not in the table.
std::vector<Detection> apply_thresholds(std::span<const Detection> dets, const ThresholdTable& table);
DetectionMap apply_thresholds(const DetectionMap& dets, const ThresholdTable& table);

/// `D00=0.41` lines in class order.
std::string format_threshold_table(const ThresholdTable& table);

/// Reads `D00=0.41` lines; blank lines and `#` comments are skipped.
ThresholdTable parse_threshold_table(std::string_view text);

}  // namespace rdd

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rdd/types.hpp"

namespace rdd {

inline constexpr int kMaxPhi = 8;

/// EfficientDet dimensions for one compound coefficient.
struct CompoundConfig {
  int phi = 0;
  int input_resolution = 0;
  int formula_resolution = 0;  // 512 + 128 * phi, before the exception table
  double bifpn_width_raw = 0.0;
  int bifpn_width = 0;         // raw width rounded to the nearest multiple of 8, ties up
  int bifpn_depth = 0;
  int head_depth = 0;
  int backbone_index = 0;      // EfficientNet-B<index>
  bool resolution_overridden = false;
};

/// Throws std::invalid_argument unless 0 <= phi <= kMaxPhi.
CompoundConfig compound_config(int phi);

/// `key=value` lines.
std::string format_compound_config(const CompoundConfig& config);

inline constexpr int kDefaultAnchorRatios = 7;
inline constexpr int kMaxKMeansIterations = 300;
inline constexpr double kKMeansTolerance = 1e-6;

struct AnchorRatioSet {
  std::vector<double> ratios;  // width / height, ascending
  int k = 0;
  /// Mean over boxes of the best IoU against an equal-area anchor of each ratio.
  double mean_best_iou = 0.0;
  /// Within-cluster sum of squared log-ratio distances after each Lloyd step.
  std::vector<double> objective_history;
  int iterations = 0;
};

/// 1-D k-means over log(w/h) with k-means++ seeding. Lloyd iterations run
/// until the largest centroid shift is below 1e-6 or 300 iterations. Clusters
/// whose members share one ratio report that ratio verbatim.
/// Throws std::invalid_argument when k == 0 or boxes.size() < k.
AnchorRatioSet kmeans_ratios(std::span<const BoundingBox> boxes, int k, std::uint64_t seed);

/// Every ground-truth box rescaled as if its image were resized, aspect
/// preserved, so that the longer side equals `target_resolution`.
std::vector<BoundingBox> ratio_features(const DatasetSplit& split, int target_resolution);

/// Comma-separated ratios, e.g. "0.5,1,2".
std::string format_ratios(std::span<const double> ratios);

}  // namespace rdd

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdd/types.hpp"

namespace rdd {

/// Competition rule: a detection is correct at IoU >= 0.5 with the same label.
inline constexpr double kCompetitionIou = 0.5;

/// IoU thresholds 0.50, 0.55, ..., 0.95 used for mAP.
std::array<double, 10> coco_iou_thresholds() noexcept;

struct MatchedPair {
  std::size_t detection = 0;
  std::size_t ground_truth = 0;
  double iou = 0.0;

  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

/// Matching of one image's detections against its ground truth.
struct MatchResult {
  double iou_threshold = kCompetitionIou;
  std::vector<MatchedPair> pairs;                // in matching order
  std::vector<std::size_t> unmatched_detections;  // ascending
  std::vector<std::size_t> unmatched_ground_truth;  // ascending
  std::vector<long> detection_to_gt;              // -1 when unmatched
};

/// Greedy protocol: detections in descending confidence (ties by index) each
/// take the highest-IoU unmatched ground truth of the same label with
/// IoU >= threshold (ties by lower ground-truth index). One-to-one.
MatchResult match_detections(std::span<const GroundTruthBox> gts, std::span<const Detection> dets,
                             double iou_threshold = kCompetitionIou);

/// Indices of `dets` in descending confidence, ties by ascending index.
std::vector<std::size_t> confidence_order(std::span<const Detection> dets);

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  Counts& operator+=(const Counts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Each of the three is 0 when its denominator is 0.
PrecisionRecallF1 precision_recall_f1(std::size_t tp, std::size_t fp, std::size_t fn) noexcept;
inline PrecisionRecallF1 precision_recall_f1(const Counts& c) noexcept {
  return precision_recall_f1(c.tp, c.fp, c.fn);
}

/// A detection reduced to what the precision/recall sweep needs.
struct ScoredDetection {
  double confidence = 0.0;
  bool true_positive = false;
};

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
};

/// One point per prefix of the confidence-sorted detections.
struct PRCurve {
  std::vector<PRPoint> points;
  std::size_t total_positives = 0;
};

/// Sorts by descending confidence (stable, so input order breaks ties) and
/// emits the (recall, precision) of every prefix.
PRCurve build_pr_curve(std::span<const ScoredDetection> detections, std::size_t total_positives);

/// All-point interpolated AP: sum over points of (r_i - r_{i-1}) times the
/// maximum precision at any recall >= r_i. 0 when there are no positives.
double average_precision(const PRCurve& curve);

/// Running maximum of precision from the right; non-increasing in recall.
std::vector<double> interpolated_precision(const PRCurve& curve);

struct ErrorThresholds {
  /// Unmatched ground truth smaller than this (px^2) is a tiny-area miss.
  double fn_tiny_area = 600.0;
  /// Unmatched D40 detections smaller than this (px^2) are flagged as likely
  /// manholes.
  double fp_small_pothole_area = 800.0;
};

struct ErrorBreakdown {
  std::size_t fp_merged_box = 0;
  std::size_t fp_small_pothole = 0;
  std::size_t fp_other = 0;
  std::size_t fn_tiny_area = 0;
  std::size_t fn_other = 0;

  std::size_t total_fp() const noexcept { return fp_merged_box + fp_small_pothole + fp_other; }
  std::size_t total_fn() const noexcept { return fn_tiny_area + fn_other; }

  ErrorBreakdown& operator+=(const ErrorBreakdown& o) noexcept;
  friend bool operator==(const ErrorBreakdown&, const ErrorBreakdown&) = default;
};

/// Categorises the misses of one image. A false positive is a merged box when
/// it overlaps at least two same-label ground truths, each with IoU strictly
/// between 0 and the match threshold; otherwise a small D40 box is a small
/// pothole; everything else is "other". A false negative is tiny-area when
/// its area is below `fn_tiny_area`.
ErrorBreakdown error_breakdown(const MatchResult& match, std::span<const GroundTruthBox> gts,
                               std::span<const Detection> dets,
                               const ErrorThresholds& thresholds = {});

struct EvalOptions {
  /// Threshold for the pooled tp/fp/fn, F1 and error breakdown.
  double iou_threshold = kCompetitionIou;
  ErrorThresholds errors;
};

struct ClassMetrics {
  ClassLabel label = ClassLabel::D00;
  std::size_t gt_count = 0;
  std::size_t det_count = 0;
  Counts counts;
  PrecisionRecallF1 prf;
  // Empty when the class has no ground truth.
  std::optional<double> ap50;
  std::optional<double> ap75;
  std::optional<double> map;
};

struct EvalReport {
  double iou_threshold = kCompetitionIou;
  Counts counts;
  PrecisionRecallF1 prf;
  double map = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  // Empty when no ground truth falls in the bucket.
  std::optional<double> ap_small;
  std::optional<double> ap_medium;
  std::optional<double> ap_large;
  std::array<ClassMetrics, kNumClasses> per_class{};
  ErrorBreakdown errors;
};

/// Full metric suite. F1 comes from tp/fp/fn pooled over every image and
/// class. AP is computed per class and averaged over classes that have ground
/// truth; mAP further averages over the ten COCO thresholds. Size-bucket APs
/// are at IoU 0.5: ground truth counts toward its own bucket, a matched
/// detection toward its ground truth's bucket, and an unmatched detection
/// toward the bucket of its own area.
/// Throws UnknownImage when `dets` names an image that is not in `split`.
EvalReport evaluate(const DatasetSplit& split, const DetectionMap& dets,
                    const EvalOptions& options = {});

struct ClassCurve {
  ClassLabel label = ClassLabel::D00;
  double iou_threshold = 0.0;
  PRCurve curve;
};

/// Per-class PR curves pooled over the split at the given threshold. Ties in
/// confidence are broken by image order in `split`, then detection index.
std::vector<ClassCurve> pr_curves(const DatasetSplit& split, const DetectionMap& dets,
                                  double iou_threshold);

std::string format_report_table(const EvalReport& report);

/// `metric,value` rows. Undefined bucket or class APs are written as empty.
std::string format_report_csv(const EvalReport& report);

/// `class,iou,recall,precision` rows.
std::string format_pr_curves_csv(std::span<const ClassCurve> curves);

}  // namespace rdd

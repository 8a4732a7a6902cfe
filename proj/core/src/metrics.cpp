#include "rdd/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "rdd/errors.hpp"
#include "rdd/geometry.hpp"
#include "text_util.hpp"

namespace rdd {

std::array<double, 10> coco_iou_thresholds() noexcept {
  std::array<double, 10> t{};
  for (int i = 0; i < 10; ++i) t[i] = (50 + 5 * i) / 100.0;
  return t;
}

std::vector<std::size_t> confidence_order(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });
  return order;
}

MatchResult match_detections(std::span<const GroundTruthBox> gts, std::span<const Detection> dets,
                             double iou_threshold) {
  MatchResult result;
  result.iou_threshold = iou_threshold;
  result.detection_to_gt.assign(dets.size(), -1);
  std::vector<bool> taken(gts.size(), false);

  for (std::size_t d : confidence_order(dets)) {
    long best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].label != dets[d].label) continue;
      const double v = iou(dets[d].box, gts[g].box);
      if (v >= iou_threshold && v > best_iou) {
        best = static_cast<long>(g);
        best_iou = v;
      }
    }
    if (best >= 0) {
      taken[best] = true;
      result.detection_to_gt[d] = best;
      result.pairs.push_back({d, static_cast<std::size_t>(best), best_iou});
    }
  }

  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (result.detection_to_gt[d] < 0) result.unmatched_detections.push_back(d);
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!taken[g]) result.unmatched_ground_truth.push_back(g);
  }
  return result;
}

PrecisionRecallF1 precision_recall_f1(std::size_t tp, std::size_t fp, std::size_t fn) noexcept {
  PrecisionRecallF1 r;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  // Single rounding, so equal count ratios compare equal.
  if (tp > 0) r.f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  return r;
}

PRCurve build_pr_curve(std::span<const ScoredDetection> detections, std::size_t total_positives) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });

  PRCurve curve;
  curve.total_positives = total_positives;
  curve.points.reserve(order.size());
  std::size_t tp = 0;
  std::size_t n = 0;
  for (std::size_t i : order) {
    ++n;
    if (detections[i].true_positive) ++tp;
    const double recall =
        total_positives == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(total_positives);
    curve.points.push_back({recall, static_cast<double>(tp) / static_cast<double>(n)});
  }
  return curve;
}

std::vector<double> interpolated_precision(const PRCurve& curve) {
  std::vector<double> env(curve.points.size());
  double running = 0.0;
  for (std::size_t i = curve.points.size(); i-- > 0;) {
    running = std::max(running, curve.points[i].precision);
    env[i] = running;
  }
  return env;
}

double average_precision(const PRCurve& curve) {
  if (curve.total_positives == 0) return 0.0;
  const auto env = interpolated_precision(curve);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const double r = curve.points[i].recall;
    if (r > prev_recall) {
      ap += (r - prev_recall) * env[i];
      prev_recall = r;
    }
  }
  return ap;
}

ErrorBreakdown& ErrorBreakdown::operator+=(const ErrorBreakdown& o) noexcept {
  fp_merged_box += o.fp_merged_box;
  fp_small_pothole += o.fp_small_pothole;
  fp_other += o.fp_other;
  fn_tiny_area += o.fn_tiny_area;
  fn_other += o.fn_other;
  return *this;
}

ErrorBreakdown error_breakdown(const MatchResult& match, std::span<const GroundTruthBox> gts,
                               std::span<const Detection> dets, const ErrorThresholds& thresholds) {
  ErrorBreakdown out;
  for (std::size_t d : match.unmatched_detections) {
    const auto& det = dets[d];
    std::size_t partial = 0;
    for (const auto& gt : gts) {
      if (gt.label != det.label) continue;
      const double v = iou(det.box, gt.box);
      if (v > 0.0 && v < match.iou_threshold) ++partial;
    }
    if (partial >= 2) {
      ++out.fp_merged_box;
    } else if (det.label == ClassLabel::D40 && area(det.box) < thresholds.fp_small_pothole_area) {
      ++out.fp_small_pothole;
    } else {
      ++out.fp_other;
    }
  }
  for (std::size_t g : match.unmatched_ground_truth) {
    if (area(gts[g].box) < thresholds.fn_tiny_area) {
      ++out.fn_tiny_area;
    } else {
      ++out.fn_other;
    }
  }
  return out;
}

namespace {

const std::vector<Detection> kNoDetections;

// Detections of each split image in split order; validates image ids.
std::vector<const std::vector<Detection>*> align(const DatasetSplit& split, const DetectionMap& dets) {
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(split.records.size());
  for (std::size_t i = 0; i < split.records.size(); ++i) index.emplace(split.records[i].image_id, i);

  std::vector<const std::vector<Detection>*> aligned(split.records.size(), &kNoDetections);
  for (const auto& [image_id, list] : dets) {
    const auto it = index.find(image_id);
    if (it == index.end()) throw UnknownImage(image_id);
    aligned[it->second] = &list;
  }
  return aligned;
}

std::vector<MatchResult> match_all(const DatasetSplit& split,
                                   const std::vector<const std::vector<Detection>*>& dets, double thr) {
  std::vector<MatchResult> out;
  out.reserve(split.records.size());
  for (std::size_t i = 0; i < split.records.size(); ++i) {
    out.push_back(match_detections(split.records[i].boxes, *dets[i], thr));
  }
  return out;
}

struct ClassPool {
  std::vector<ScoredDetection> scored;
  std::size_t positives = 0;
};

// Per-class pools in split order, optionally restricted to one size bucket.
std::array<ClassPool, kNumClasses> pool(const DatasetSplit& split,
                                        const std::vector<const std::vector<Detection>*>& dets,
                                        const std::vector<MatchResult>& matches,
                                        std::optional<SizeBucket> bucket) {
  std::array<ClassPool, kNumClasses> pools;
  for (std::size_t i = 0; i < split.records.size(); ++i) {
    const auto& gts = split.records[i].boxes;
    for (const auto& gt : gts) {
      if (bucket && size_bucket(gt.box) != *bucket) continue;
      ++pools[class_index(gt.label)].positives;
    }
    const auto& list = *dets[i];
    for (std::size_t d = 0; d < list.size(); ++d) {
      const long g = matches[i].detection_to_gt[d];
      if (bucket) {
        const auto& owner = g >= 0 ? gts[static_cast<std::size_t>(g)].box : list[d].box;
        if (size_bucket(owner) != *bucket) continue;
      }
      pools[class_index(list[d].label)].scored.push_back({list[d].confidence, g >= 0});
    }
  }
  return pools;
}

// AP per class (empty for classes without positives) and the mean over the rest.
struct ApSummary {
  std::array<std::optional<double>, kNumClasses> per_class;
  std::optional<double> mean;
};

ApSummary summarize(const std::array<ClassPool, kNumClasses>& pools) {
  ApSummary s;
  double sum = 0.0;
  int n = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (pools[c].positives == 0) continue;
    const double ap = average_precision(build_pr_curve(pools[c].scored, pools[c].positives));
    s.per_class[c] = ap;
    sum += ap;
    ++n;
  }
  if (n > 0) s.mean = sum / n;
  return s;
}

}  // namespace

EvalReport evaluate(const DatasetSplit& split, const DetectionMap& dets, const EvalOptions& options) {
  const auto aligned = align(split, dets);
  const auto thresholds = coco_iou_thresholds();

  EvalReport report;
  report.iou_threshold = options.iou_threshold;

  std::array<double, kNumClasses> class_map_sum{};
  double map_sum = 0.0;
  std::vector<MatchResult> at50;
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    auto matches = match_all(split, aligned, thresholds[t]);
    const auto summary = summarize(pool(split, aligned, matches, std::nullopt));
    const double mean = summary.mean.value_or(0.0);
    map_sum += mean;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      class_map_sum[c] += summary.per_class[c].value_or(0.0);
    }
    if (t == 0) {
      report.ap50 = mean;
      for (std::size_t c = 0; c < kNumClasses; ++c) report.per_class[c].ap50 = summary.per_class[c];
      at50 = std::move(matches);
    } else if (t == 5) {
      report.ap75 = mean;
      for (std::size_t c = 0; c < kNumClasses; ++c) report.per_class[c].ap75 = summary.per_class[c];
    }
  }
  report.map = map_sum / static_cast<double>(thresholds.size());

  report.ap_small = summarize(pool(split, aligned, at50, SizeBucket::Small)).mean;
  report.ap_medium = summarize(pool(split, aligned, at50, SizeBucket::Medium)).mean;
  report.ap_large = summarize(pool(split, aligned, at50, SizeBucket::Large)).mean;

  const auto competition = options.iou_threshold == thresholds[0]
                               ? at50
                               : match_all(split, aligned, options.iou_threshold);

  for (std::size_t c = 0; c < kNumClasses; ++c) report.per_class[c].label = kAllClasses[c];

  for (std::size_t i = 0; i < split.records.size(); ++i) {
    const auto& gts = split.records[i].boxes;
    const auto& list = *aligned[i];
    const auto& m = competition[i];
    for (const auto& gt : gts) ++report.per_class[class_index(gt.label)].gt_count;
    for (std::size_t d = 0; d < list.size(); ++d) {
      auto& pc = report.per_class[class_index(list[d].label)];
      ++pc.det_count;
      if (m.detection_to_gt[d] >= 0) {
        ++pc.counts.tp;
      } else {
        ++pc.counts.fp;
      }
    }
    for (std::size_t g : m.unmatched_ground_truth) ++report.per_class[class_index(gts[g].label)].counts.fn;
    report.errors += error_breakdown(m, gts, list, options.errors);
  }

  for (auto& pc : report.per_class) {
    pc.prf = precision_recall_f1(pc.counts);
    if (pc.gt_count > 0) pc.map = class_map_sum[class_index(pc.label)] / static_cast<double>(thresholds.size());
    report.counts += pc.counts;
  }
  report.prf = precision_recall_f1(report.counts);
  return report;
}

std::vector<ClassCurve> pr_curves(const DatasetSplit& split, const DetectionMap& dets, double iou_threshold) {
  const auto aligned = align(split, dets);
  const auto matches = match_all(split, aligned, iou_threshold);
  const auto pools = pool(split, aligned, matches, std::nullopt);
  std::vector<ClassCurve> out;
  for (ClassLabel label : kAllClasses) {
    const auto& p = pools[class_index(label)];
    out.push_back({label, iou_threshold, build_pr_curve(p.scored, p.positives)});
  }
  return out;
}

namespace {

std::string fmt_opt(const std::optional<double>& v, int precision) {
  if (!v) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << *v;
  return s.str();
}

std::string csv_opt(const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string(); }

}  // namespace

std::string format_report_table(const EvalReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "IoU threshold   " << r.iou_threshold << "\n";
  out << "tp / fp / fn    " << r.counts.tp << " / " << r.counts.fp << " / " << r.counts.fn << "\n";
  out << "precision       " << r.prf.precision << "\n";
  out << "recall          " << r.prf.recall << "\n";
  out << "F1              " << r.prf.f1 << "\n";
  out << "mAP@[.50:.95]   " << r.map << "\n";
  out << "AP50            " << r.ap50 << "\n";
  out << "AP75            " << r.ap75 << "\n";
  out << "AP small        " << fmt_opt(r.ap_small, 4) << "\n";
  out << "AP medium       " << fmt_opt(r.ap_medium, 4) << "\n";
  out << "AP large        " << fmt_opt(r.ap_large, 4) << "\n\n";

  out << std::left << std::setw(7) << "class" << std::right << std::setw(7) << "gt" << std::setw(7) << "tp"
      << std::setw(7) << "fp" << std::setw(7) << "fn" << std::setw(9) << "P" << std::setw(9) << "R"
      << std::setw(9) << "F1" << std::setw(9) << "AP50" << std::setw(9) << "AP75" << std::setw(9) << "mAP"
      << "\n";
  for (const auto& pc : r.per_class) {
    out << std::left << std::setw(7) << class_name(pc.label) << std::right << std::setw(7) << pc.gt_count
        << std::setw(7) << pc.counts.tp << std::setw(7) << pc.counts.fp << std::setw(7) << pc.counts.fn
        << std::setw(9) << pc.prf.precision << std::setw(9) << pc.prf.recall << std::setw(9) << pc.prf.f1
        << std::setw(9) << fmt_opt(pc.ap50, 4) << std::setw(9) << fmt_opt(pc.ap75, 4) << std::setw(9)
        << fmt_opt(pc.map, 4) << "\n";
  }

  const auto& e = r.errors;
  out << "\nfalse positives: merged-box " << e.fp_merged_box << ", small-pothole " << e.fp_small_pothole
      << ", other " << e.fp_other << "\n";
  out << "false negatives: tiny-area " << e.fn_tiny_area << ", other " << e.fn_other << "\n";
  return out.str();
}

std::string format_report_csv(const EvalReport& r) {
  std::ostringstream out;
  auto row = [&](const std::string& key, const std::string& value) { out << key << "," << value << "\n"; };
  auto num = [](double v) { return detail::format_double(v); };
  out << "metric,value\n";
  row("iou_threshold", num(r.iou_threshold));
  row("tp", std::to_string(r.counts.tp));
  row("fp", std::to_string(r.counts.fp));
  row("fn", std::to_string(r.counts.fn));
  row("precision", num(r.prf.precision));
  row("recall", num(r.prf.recall));
  row("f1", num(r.prf.f1));
  row("mAP", num(r.map));
  row("AP50", num(r.ap50));
  row("AP75", num(r.ap75));
  row("APs", csv_opt(r.ap_small));
  row("APm", csv_opt(r.ap_medium));
  row("APl", csv_opt(r.ap_large));
  for (const auto& pc : r.per_class) {
    const std::string p(class_name(pc.label));
    row(p + ".gt", std::to_string(pc.gt_count));
    row(p + ".tp", std::to_string(pc.counts.tp));
    row(p + ".fp", std::to_string(pc.counts.fp));
    row(p + ".fn", std::to_string(pc.counts.fn));
    row(p + ".precision", num(pc.prf.precision));
    row(p + ".recall", num(pc.prf.recall));
    row(p + ".f1", num(pc.prf.f1));
    row(p + ".AP50", csv_opt(pc.ap50));
    row(p + ".AP75", csv_opt(pc.ap75));
    row(p + ".mAP", csv_opt(pc.map));
  }
  row("fp_merged_box", std::to_string(r.errors.fp_merged_box));
  row("fp_small_pothole", std::to_string(r.errors.fp_small_pothole));
  row("fp_other", std::to_string(r.errors.fp_other));
  row("fn_tiny_area", std::to_string(r.errors.fn_tiny_area));
  row("fn_other", std::to_string(r.errors.fn_other));
  return out.str();
}

std::string format_pr_curves_csv(std::span<const ClassCurve> curves) {
  std::string out = "class,iou,recall,precision\n";
  for (const auto& c : curves) {
    for (const auto& p : c.curve.points) {
      out += class_name(c.label);
      out += ',';
      out += detail::format_double(c.iou_threshold);
      out += ',';
      out += detail::format_double(p.recall);
      out += ',';
      out += detail::format_double(p.precision);
      out += '\n';
    }
  }
  return out;
}

}  // namespace rdd

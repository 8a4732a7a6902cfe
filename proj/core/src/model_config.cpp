#include "rdd/model_config.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "rdd/geometry.hpp"
#include "rdd/random.hpp"
#include "text_util.hpp"

namespace rdd {

namespace {

// Backbone column of the published model table. phi 5, 6 and 8 are not in
// the table and follow the EfficientDet family pairing.
constexpr std::array<int, kMaxPhi + 1> kBackboneIndex{0, 1, 2, 3, 4, 5, 6, 6, 7};

struct ResolutionOverride {
  int phi;
  int resolution;
};
// D7 is published at 1536 although 512 + 128 * 7 = 1408.
constexpr std::array<ResolutionOverride, 1> kResolutionOverrides{{{7, 1536}}};

}  // namespace

CompoundConfig compound_config(int phi) {
  if (phi < 0 || phi > kMaxPhi) {
    throw std::invalid_argument("phi must be in [0, " + std::to_string(kMaxPhi) + "]");
  }
  CompoundConfig c;
  c.phi = phi;
  c.formula_resolution = 512 + 128 * phi;
  c.input_resolution = c.formula_resolution;
  for (const auto& o : kResolutionOverrides) {
    if (o.phi == phi) {
      c.input_resolution = o.resolution;
      c.resolution_overridden = true;
    }
  }
  c.bifpn_width_raw = 64.0 * std::pow(1.35, phi);
  c.bifpn_width = static_cast<int>(std::floor(c.bifpn_width_raw / 8.0 + 0.5)) * 8;
  c.bifpn_depth = 3 + phi;
  c.head_depth = 3 + phi / 3;
  c.backbone_index = kBackboneIndex[static_cast<std::size_t>(phi)];
  return c;
}

std::string format_compound_config(const CompoundConfig& c) {
  std::ostringstream out;
  out << "resolution=" << c.input_resolution << "\n"
      << "formula_resolution=" << c.formula_resolution << "\n"
      << "resolution_overridden=" << (c.resolution_overridden ? "true" : "false") << "\n"
      << "bifpn_width=" << c.bifpn_width << "\n"
      << "bifpn_width_raw=" << detail::format_double(c.bifpn_width_raw) << "\n"
      << "bifpn_depth=" << c.bifpn_depth << "\n"
      << "head_depth=" << c.head_depth << "\n"
      << "backbone=B" << c.backbone_index << "\n"
      << "phi=" << c.phi << "\n";
  return out.str();
}

namespace {

std::size_t nearest(const std::vector<double>& centroids, double x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    const double d = (x - centroids[j]) * (x - centroids[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

std::vector<double> kmeanspp_seeds(const std::vector<double>& x, std::size_t k, Rng& rng) {
  std::vector<double> centroids{x[rng.index(x.size())]};
  std::vector<double> dist(x.size());
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - centroids[nearest(centroids, x[i])];
      dist[i] = d * d;
      total += dist[i];
    }
    if (total == 0.0) {
      // Fewer distinct values than clusters.
      centroids.push_back(x[rng.index(x.size())]);
      continue;
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = x.size();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (dist[i] == 0.0) continue;
      acc += dist[i];
      pick = i;
      if (acc > target) break;
    }
    centroids.push_back(x[pick]);
  }
  return centroids;
}

double ratio_iou(double r, double a) {
  const double s = std::sqrt(std::min(r, a) / std::max(r, a));
  return s / (2.0 - s);
}

}  // namespace

AnchorRatioSet kmeans_ratios(std::span<const BoundingBox> boxes, int k, std::uint64_t seed) {
  if (k <= 0) throw std::invalid_argument("kmeans_ratios: k must be at least 1");
  if (boxes.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("kmeans_ratios: fewer boxes than clusters");
  }

  std::vector<double> ratio(boxes.size());
  std::vector<double> x(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    ratio[i] = boxes[i].width() / boxes[i].height();
    x[i] = std::log(ratio[i]);
  }

  Rng rng(seed);
  const auto kk = static_cast<std::size_t>(k);
  auto centroids = kmeanspp_seeds(x, kk, rng);

  AnchorRatioSet result;
  result.k = k;
  std::vector<std::size_t> assign(x.size());
  for (int iter = 1; iter <= kMaxKMeansIterations; ++iter) {
    for (std::size_t i = 0; i < x.size(); ++i) assign[i] = nearest(centroids, x[i]);

    std::vector<double> sum(kk, 0.0);
    std::vector<std::size_t> count(kk, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      sum[assign[i]] += x[i];
      ++count[assign[i]];
    }
    double shift = 0.0;
    for (std::size_t j = 0; j < kk; ++j) {
      if (count[j] == 0) continue;  // empty cluster keeps its centroid
      const double updated = sum[j] / static_cast<double>(count[j]);
      shift = std::max(shift, std::abs(updated - centroids[j]));
      centroids[j] = updated;
    }

    double objective = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - centroids[assign[i]];
      objective += d * d;
    }
    result.objective_history.push_back(objective);
    result.iterations = iter;
    if (shift < kKMeansTolerance) break;
  }

  // Final membership against the converged centroids.
  for (std::size_t i = 0; i < x.size(); ++i) assign[i] = nearest(centroids, x[i]);
  result.ratios.resize(kk);
  for (std::size_t j = 0; j < kk; ++j) {
    result.ratios[j] = std::exp(centroids[j]);
    std::optional<double> shared;
    bool uniform = true;
    for (std::size_t i = 0; i < x.size() && uniform; ++i) {
      if (assign[i] != j) continue;
      if (!shared) {
        shared = ratio[i];
      } else if (*shared != ratio[i]) {
        uniform = false;
      }
    }
    if (shared && uniform) result.ratios[j] = *shared;
  }
  std::sort(result.ratios.begin(), result.ratios.end());

  double fit = 0.0;
  for (double r : ratio) {
    double best = 0.0;
    for (double a : result.ratios) best = std::max(best, ratio_iou(r, a));
    fit += best;
  }
  result.mean_best_iou = fit / static_cast<double>(ratio.size());
  return result;
}

std::vector<BoundingBox> ratio_features(const DatasetSplit& split, int target_resolution) {
  if (target_resolution <= 0) throw std::invalid_argument("ratio_features: resolution must be positive");
  std::vector<BoundingBox> out;
  for (const auto& record : split.records) {
    const double s = static_cast<double>(target_resolution) / std::max(record.width, record.height);
    for (const auto& gt : record.boxes) out.push_back(scale_box(gt.box, s, s));
  }
  return out;
}

std::string format_ratios(std::span<const double> ratios) {
  std::ostringstream out;
  out.precision(6);
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (i) out << ',';
    out << ratios[i];
  }
  return out.str();
}

}  // namespace rdd

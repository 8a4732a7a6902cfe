#include "rdd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rdd {

const char* bucket_name(SizeBucket bucket) noexcept {
  switch (bucket) {
    case SizeBucket::Small: return "small";
    case SizeBucket::Medium: return "medium";
    case SizeBucket::Large: return "large";
  }
  return "?";
}

double area(const BoundingBox& b) noexcept { return (b.xmax - b.xmin) * (b.ymax - b.ymin); }

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = area(a) + area(b) - inter;
  return inter / uni;
}

SizeBucket size_bucket(const BoundingBox& b) noexcept {
  const double a = area(b);
  if (a < kSmallAreaLimit) return SizeBucket::Small;
  if (a <= kLargeAreaLimit) return SizeBucket::Medium;
  return SizeBucket::Large;
}

BoundingBox flip_h(const BoundingBox& b, double image_width) {
  if (b.xmin < 0.0 || b.xmax > image_width) {
    throw std::invalid_argument("flip_h: box exceeds image width");
  }
  return {image_width - b.xmax, b.ymin, image_width - b.xmin, b.ymax};
}

BoundingBox scale_box(const BoundingBox& b, double sx, double sy) {
  if (!(sx > 0.0) || !(sy > 0.0)) throw std::invalid_argument("scale_box: scale must be positive");
  return {b.xmin * sx, b.ymin * sy, b.xmax * sx, b.ymax * sy};
}

BoundingBox translate_box(const BoundingBox& b, double dx, double dy) noexcept {
  return {b.xmin + dx, b.ymin + dy, b.xmax + dx, b.ymax + dy};
}

BoundingBox rotate_box(const BoundingBox& b, double degrees, double cx, double cy) noexcept {
  const double theta = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double xs[4] = {b.xmin, b.xmax, b.xmin, b.xmax};
  const double ys[4] = {b.ymin, b.ymin, b.ymax, b.ymax};
  BoundingBox out{INFINITY, INFINITY, -INFINITY, -INFINITY};
  for (int i = 0; i < 4; ++i) {
    const double u = xs[i] - cx;
    const double v = ys[i] - cy;
    const double x = cx + u * c + v * s;
    const double y = cy - u * s + v * c;
    out.xmin = std::min(out.xmin, x);
    out.xmax = std::max(out.xmax, x);
    out.ymin = std::min(out.ymin, y);
    out.ymax = std::max(out.ymax, y);
  }
  return out;
}

std::optional<BoundingBox> clip_box(const BoundingBox& b, double width, double height,
                                    double min_area) noexcept {
  BoundingBox c{std::clamp(b.xmin, 0.0, width), std::clamp(b.ymin, 0.0, height),
                std::clamp(b.xmax, 0.0, width), std::clamp(b.ymax, 0.0, height)};
  if (c.xmax <= c.xmin || c.ymax <= c.ymin || area(c) < min_area) return std::nullopt;
  return c;
}

}  // namespace rdd

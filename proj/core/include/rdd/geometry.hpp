#pragma once

#include <optional>

#include "rdd/types.hpp"

namespace rdd {

enum class SizeBucket { Small, Medium, Large };

inline constexpr double kSmallAreaLimit = 32.0 * 32.0;   // 1024
inline constexpr double kLargeAreaLimit = 96.0 * 96.0;   // 9216

const char* bucket_name(SizeBucket bucket) noexcept;

double area(const BoundingBox& b) noexcept;

/// Intersection over union; 0 for disjoint boxes. Both boxes must be valid.
double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Small: area < 32^2. Medium: 32^2 <= area <= 96^2. Large: area > 96^2.
SizeBucket size_bucket(const BoundingBox& b) noexcept;

/// Mirror about the vertical axis of an image `image_width` pixels wide.
/// Throws std::invalid_argument when the box extends past the image.
BoundingBox flip_h(const BoundingBox& b, double image_width);

/// Multiplies x coordinates by sx and y coordinates by sy (both > 0).
BoundingBox scale_box(const BoundingBox& b, double sx, double sy);

BoundingBox translate_box(const BoundingBox& b, double dx, double dy) noexcept;

/// Axis-aligned hull of the box corners rotated by `degrees` (counter-clockwise
/// in image coordinates, y down) about (cx, cy).
BoundingBox rotate_box(const BoundingBox& b, double degrees, double cx, double cy) noexcept;

/// Intersection with [0,width] x [0,height]. Empty when less than
/// `min_area` square pixels remain.
std::optional<BoundingBox> clip_box(const BoundingBox& b, double width, double height,
                                    double min_area = 1.0) noexcept;

}  // namespace rdd

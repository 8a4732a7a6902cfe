#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rdd {

/// Road-damage categories of the JRA taxonomy used by the challenge data.
enum class ClassLabel : std::uint8_t {
  D00,  ///< longitudinal crack
  D10,  ///< transverse crack
  D20,  ///< alligator crack
  D40,  ///< pothole
};

inline constexpr std::size_t kNumClasses = 4;
inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses{
    ClassLabel::D00, ClassLabel::D10, ClassLabel::D20, ClassLabel::D40};

constexpr std::size_t class_index(ClassLabel label) noexcept {
  return static_cast<std::size_t>(label);
}

std::string_view class_name(ClassLabel label) noexcept;
std::string_view class_description(ClassLabel label) noexcept;
std::optional<ClassLabel> class_from_name(std::string_view name) noexcept;

/// Submission ordinal: D00 -> 1, D10 -> 2, D20 -> 3, D40 -> 4.
constexpr int class_ordinal(ClassLabel label) noexcept {
  return static_cast<int>(label) + 1;
}
std::optional<ClassLabel> class_from_ordinal(int code) noexcept;

/// Axis-aligned box in continuous pixel coordinates, [xmin,xmax) x [ymin,ymax).
/// No VOC "+1" convention: area is (xmax - xmin) * (ymax - ymin).
struct BoundingBox {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const noexcept { return xmax - xmin; }
  double height() const noexcept { return ymax - ymin; }

  /// Finite, non-negative, and strictly positive extent on both axes.
  bool valid() const noexcept;

  /// Builds a box or throws InvalidBox when `valid()` would be false.
  static BoundingBox checked(double xmin, double ymin, double xmax, double ymax);

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct GroundTruthBox {
  BoundingBox box;
  ClassLabel label = ClassLabel::D00;

  friend bool operator==(const GroundTruthBox&, const GroundTruthBox&) = default;
};

struct Detection {
  BoundingBox box;
  ClassLabel label = ClassLabel::D00;
  double confidence = 1.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct ImageRecord {
  std::string image_id;  // filename stem
  int width = 0;
  int height = 0;
  std::vector<GroundTruthBox> boxes;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct DatasetSplit {
  std::string name;
  std::vector<ImageRecord> records;

  const ImageRecord* find(std::string_view image_id) const noexcept;
};

/// Detections keyed by image id. Ordered so that serialization is canonical.
using DetectionMap = std::map<std::string, std::vector<Detection>, std::less<>>;

}  // namespace rdd

#include "rdd/types.hpp"

#include <cmath>
#include <sstream>

#include "rdd/errors.hpp"

namespace rdd {

namespace {

constexpr std::array<std::string_view, kNumClasses> kNames{"D00", "D10", "D20", "D40"};
constexpr std::array<std::string_view, kNumClasses> kDescriptions{
    "longitudinal crack", "transverse crack", "alligator crack", "pothole"};

}  // namespace

std::string_view class_name(ClassLabel label) noexcept { return kNames[class_index(label)]; }

std::string_view class_description(ClassLabel label) noexcept {
  return kDescriptions[class_index(label)];
}

std::optional<ClassLabel> class_from_name(std::string_view name) noexcept {
  for (ClassLabel label : kAllClasses) {
    if (kNames[class_index(label)] == name) return label;
  }
  return std::nullopt;
}

std::optional<ClassLabel> class_from_ordinal(int code) noexcept {
  if (code < 1 || code > static_cast<int>(kNumClasses)) return std::nullopt;
  return static_cast<ClassLabel>(code - 1);
}

bool BoundingBox::valid() const noexcept {
  return std::isfinite(xmin) && std::isfinite(ymin) && std::isfinite(xmax) && std::isfinite(ymax) &&
         xmin >= 0.0 && ymin >= 0.0 && xmin < xmax && ymin < ymax;
}

BoundingBox BoundingBox::checked(double xmin, double ymin, double xmax, double ymax) {
  BoundingBox b{xmin, ymin, xmax, ymax};
  if (!b.valid()) {
    std::ostringstream msg;
    msg << "invalid box (" << xmin << ", " << ymin << ", " << xmax << ", " << ymax << ")";
    throw InvalidBox(msg.str());
  }
  return b;
}

const ImageRecord* DatasetSplit::find(std::string_view image_id) const noexcept {
  for (const auto& record : records) {
    if (record.image_id == image_id) return &record;
  }
  return nullptr;
}

}  // namespace rdd

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rdd/image.hpp"
#include "rdd/types.hpp"

namespace rdd {

enum class TransformKind { HFlip, Resize, Translate, Brightness, Contrast, Equalize, Rotate };

const char* transform_name(TransformKind kind) noexcept;
bool is_geometric(TransformKind kind) noexcept;

struct MagnitudeRange {
  double min = 0.0;
  double max = 0.0;
};

/// Units per kind:
///   HFlip, Equalize  unused, must be 0
///   Resize           target length of the longer side in pixels, [1, 8192]
///   Translate        shift in pixels, [0, 1000]; axis and sign drawn per call
///   Brightness       blend factor against black, [0, 2]
///   Contrast         blend factor against mean grey, [0, 2]
///   Rotate           angle in degrees, [0, 90]; sign drawn per call
MagnitudeRange magnitude_range(TransformKind kind) noexcept;

struct TransformSpec {
  TransformKind kind = TransformKind::HFlip;
  double probability = 0.0;
  double magnitude = 0.0;

  friend bool operator==(const TransformSpec&, const TransformSpec&) = default;
};

using SubPolicy = std::vector<TransformSpec>;

struct AugPolicy {
  std::string name;
  std::vector<SubPolicy> sub_policies;
  bool rotation_free = false;

  bool contains_rotation() const noexcept;
  friend bool operator==(const AugPolicy&, const AugPolicy&) = default;
};

/// Throws InvalidPolicy when there are no sub-policies, a probability or
/// magnitude is out of range, or rotation_free is claimed while a Rotate spec
/// is present.
void validate_policy(const AugPolicy& policy);

/// Removes every Rotate spec, keeping the rest in order, and marks the policy
/// rotation free. Rotation turns longitudinal cracks into transverse ones
/// (and back) without touching the label, so crack policies must not rotate.
AugPolicy strip_rotation(AugPolicy policy);

/// Policy file grammar, one sub-policy per line:
///   Kind(prob,magnitude),Kind(prob,magnitude),...
/// `#` starts a comment line. Directives: `@name <text>`, `@rotation_free`.
/// The result is validated.
AugPolicy parse_policy(std::string_view text, std::string default_name = {});
std::string format_policy(const AugPolicy& policy);
AugPolicy load_policy(const std::filesystem::path& path);

/// One spec that fired, with its randomly resolved parameters.
struct AppliedTransform {
  TransformKind kind = TransformKind::HFlip;
  double magnitude = 0.0;  // signed angle for Rotate, factor, or target length
  double dx = 0.0;         // Translate only
  double dy = 0.0;
};

struct AugmentResult {
  ImageBuffer image;
  std::vector<GroundTruthBox> boxes;
  std::size_t dropped_boxes = 0;  // clipped below 1 px^2
  std::size_t sub_policy = 0;
  std::vector<AppliedTransform> applied;
};

/// Picks one sub-policy uniformly, fires each spec with its probability, and
/// moves the boxes with every geometric transform. Output boxes are clipped
/// to the output image; those left with < 1 px^2 are dropped and counted.
/// Throws InvalidPolicy for an invalid policy and std::invalid_argument for
/// an invalid image or a box outside it.
AugmentResult apply_policy(const ImageBuffer& image, std::span<const GroundTruthBox> boxes,
                           const AugPolicy& policy, std::uint64_t seed);

/// Per-channel statistics used to normalise network input, in 0-255 units.
/// Defaults are the ImageNet RGB mean and standard deviation.
struct Normalization {
  std::array<double, 3> mean{123.675, 116.28, 103.53};
  std::array<double, 3> stddev{58.395, 57.12, 57.375};

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

struct PreprocessOptions {
  int target_resolution = 512;
  double hflip_probability = 0.5;
  Normalization normalization;
};

struct PreprocessResult {
  ImageBuffer image;
  std::vector<GroundTruthBox> boxes;
  std::size_t dropped_boxes = 0;
  Normalization normalization;
  bool flipped = false;
  double scale_x = 1.0;
  double scale_y = 1.0;
};

/// Optional seeded horizontal flip, then a resize so the longer side equals
/// the target resolution. Normalisation parameters are recorded, not applied;
/// see normalize().
PreprocessResult preprocess(const ImageBuffer& image, std::span<const GroundTruthBox> boxes,
                            const PreprocessOptions& options, std::uint64_t seed);

/// `class,xmin,ymin,xmax,ymax` rows with a header line.
std::string format_boxes_csv(std::span<const GroundTruthBox> boxes);
std::vector<GroundTruthBox> parse_boxes_csv(std::string_view text);

/// (value - mean[c]) / stddev[c], interleaved HWC.
std::vector<float> normalize(const ImageBuffer& image, const Normalization& norm);

// Image operations. Geometric ones have a matching box transform in geometry.hpp.
ImageBuffer hflip_image(const ImageBuffer& image);
ImageBuffer resize_image(const ImageBuffer& image, int width, int height);
/// Dimensions after scaling so that the longer side equals `target`.
std::array<int, 2> longer_side_size(int width, int height, int target);
ImageBuffer translate_image(const ImageBuffer& image, int dx, int dy, std::uint8_t fill = 128);
ImageBuffer rotate_image(const ImageBuffer& image, double degrees, std::uint8_t fill = 128);
ImageBuffer adjust_brightness(const ImageBuffer& image, double factor);
ImageBuffer adjust_contrast(const ImageBuffer& image, double factor);
/// Per-channel histogram equalization; constant channels are left as-is.
ImageBuffer equalize(const ImageBuffer& image);

}  // namespace rdd

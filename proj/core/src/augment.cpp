#include "rdd/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rdd/dataset_io.hpp"
#include "rdd/errors.hpp"
#include "rdd/geometry.hpp"
#include "rdd/random.hpp"
#include "text_util.hpp"

namespace rdd {

namespace {

constexpr std::array<TransformKind, 7> kAllKinds{TransformKind::HFlip,      TransformKind::Resize,
                                                 TransformKind::Translate,  TransformKind::Brightness,
                                                 TransformKind::Contrast,   TransformKind::Equalize,
                                                 TransformKind::Rotate};

std::uint8_t saturate(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

const char* transform_name(TransformKind kind) noexcept {
  switch (kind) {
    case TransformKind::HFlip: return "HFlip";
    case TransformKind::Resize: return "Resize";
    case TransformKind::Translate: return "Translate";
    case TransformKind::Brightness: return "Brightness";
    case TransformKind::Contrast: return "Contrast";
    case TransformKind::Equalize: return "Equalize";
    case TransformKind::Rotate: return "Rotate";
  }
  return "?";
}

bool is_geometric(TransformKind kind) noexcept {
  return kind == TransformKind::HFlip || kind == TransformKind::Resize || kind == TransformKind::Translate ||
         kind == TransformKind::Rotate;
}

MagnitudeRange magnitude_range(TransformKind kind) noexcept {
  switch (kind) {
    case TransformKind::HFlip:
    case TransformKind::Equalize: return {0.0, 0.0};
    case TransformKind::Resize: return {1.0, 8192.0};
    case TransformKind::Translate: return {0.0, 1000.0};
    case TransformKind::Brightness:
    case TransformKind::Contrast: return {0.0, 2.0};
    case TransformKind::Rotate: return {0.0, 90.0};
  }
  return {};
}

bool AugPolicy::contains_rotation() const noexcept {
  for (const auto& sub : sub_policies) {
    for (const auto& spec : sub) {
      if (spec.kind == TransformKind::Rotate) return true;
    }
  }
  return false;
}

void validate_policy(const AugPolicy& policy) {
  const std::string who = policy.name.empty() ? std::string("policy") : "policy " + policy.name;
  if (policy.sub_policies.empty()) throw InvalidPolicy(who + " has no sub-policies");
  if (policy.rotation_free && policy.contains_rotation()) {
    throw InvalidPolicy(who + " is marked rotation free but contains Rotate");
  }
  for (const auto& sub : policy.sub_policies) {
    for (const auto& spec : sub) {
      if (!(spec.probability >= 0.0 && spec.probability <= 1.0)) {
        throw InvalidPolicy(who + ": " + transform_name(spec.kind) + " probability outside [0,1]");
      }
      const auto range = magnitude_range(spec.kind);
      if (!(spec.magnitude >= range.min && spec.magnitude <= range.max)) {
        std::ostringstream msg;
        msg << who << ": " << transform_name(spec.kind) << " magnitude " << spec.magnitude << " outside ["
            << range.min << ", " << range.max << "]";
        throw InvalidPolicy(msg.str());
      }
    }
  }
}

AugPolicy strip_rotation(AugPolicy policy) {
  for (auto& sub : policy.sub_policies) {
    std::erase_if(sub, [](const TransformSpec& s) { return s.kind == TransformKind::Rotate; });
  }
  policy.rotation_free = true;
  return policy;
}

namespace {

SubPolicy parse_sub_policy(std::string_view line, std::size_t line_no) {
  SubPolicy sub;
  if (line == "-") return sub;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ',' || line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    const auto open = line.find('(', i);
    const auto close = line.find(')', i);
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
      throw ParseError("expected Kind(probability,magnitude)", line_no);
    }
    const auto name = detail::trim(line.substr(i, open - i));
    const auto kind = std::find_if(kAllKinds.begin(), kAllKinds.end(),
                                   [&](TransformKind k) { return name == transform_name(k); });
    if (kind == kAllKinds.end()) throw ParseError("unknown transform \"" + std::string(name) + "\"", line_no);

    const auto args = line.substr(open + 1, close - open - 1);
    const auto comma = args.find(',');
    if (comma == std::string_view::npos) throw ParseError("expected two arguments", line_no);
    const auto prob = detail::parse_double(args.substr(0, comma));
    const auto mag = detail::parse_double(args.substr(comma + 1));
    if (!prob || !mag) throw ParseError("non-numeric transform argument", line_no);
    sub.push_back({*kind, *prob, *mag});
    i = close + 1;
  }
  return sub;
}

}  // namespace

AugPolicy parse_policy(std::string_view text, std::string default_name) {
  AugPolicy policy;
  policy.name = std::move(default_name);
  std::size_t line_no = 0;
  for (auto raw : detail::split_lines(text)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '@') {
      if (line == "@rotation_free") {
        policy.rotation_free = true;
      } else if (line.starts_with("@name ")) {
        policy.name = std::string(detail::trim(line.substr(6)));
      } else {
        throw ParseError("unknown directive \"" + std::string(line) + "\"", line_no);
      }
      continue;
    }
    policy.sub_policies.push_back(parse_sub_policy(line, line_no));
  }
  validate_policy(policy);
  return policy;
}

std::string format_policy(const AugPolicy& policy) {
  std::string out;
  if (!policy.name.empty()) out += "@name " + policy.name + "\n";
  if (policy.rotation_free) out += "@rotation_free\n";
  for (const auto& sub : policy.sub_policies) {
    if (sub.empty()) {
      out += "-\n";
      continue;
    }
    for (std::size_t i = 0; i < sub.size(); ++i) {
      if (i) out += ',';
      out += transform_name(sub[i].kind);
      out += '(' + detail::format_double(sub[i].probability) + ',' + detail::format_double(sub[i].magnitude) + ')';
    }
    out += '\n';
  }
  return out;
}

AugPolicy load_policy(const std::filesystem::path& path) {
  return parse_policy(read_text_file(path), path.stem().string());
}

ImageBuffer hflip_image(const ImageBuffer& image) {
  ImageBuffer out(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = image.at(image.width - 1 - x, y, c);
    }
  }
  return out;
}

std::array<int, 2> longer_side_size(int width, int height, int target) {
  if (width <= 0 || height <= 0 || target <= 0) throw std::invalid_argument("longer_side_size: non-positive size");
  if (width >= height) {
    const long shorter = std::lround(static_cast<double>(height) * target / width);
    return {target, static_cast<int>(std::max(1L, shorter))};
  }
  const long shorter = std::lround(static_cast<double>(width) * target / height);
  return {static_cast<int>(std::max(1L, shorter)), target};
}

ImageBuffer resize_image(const ImageBuffer& image, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("resize_image: non-positive size");
  if (width == image.width && height == image.height) return image;
  ImageBuffer out(width, height);
  const double fx = static_cast<double>(image.width) / width;
  const double fy = static_cast<double>(image.height) / height;
  for (int y = 0; y < height; ++y) {
    const double sy = std::clamp((y + 0.5) * fy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = sy - y0;
    for (int x = 0; x < width; ++x) {
      const double sx = std::clamp((x + 0.5) * fx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = sx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = image.at(x0, y0, c) * (1.0 - wx) + image.at(x1, y0, c) * wx;
        const double bottom = image.at(x0, y1, c) * (1.0 - wx) + image.at(x1, y1, c) * wx;
        out.at(x, y, c) = saturate(top * (1.0 - wy) + bottom * wy);
      }
    }
  }
  return out;
}

ImageBuffer translate_image(const ImageBuffer& image, int dx, int dy, std::uint8_t fill) {
  ImageBuffer out(image.width, image.height, fill);
  for (int y = 0; y < image.height; ++y) {
    const int sy = y - dy;
    if (sy < 0 || sy >= image.height) continue;
    for (int x = 0; x < image.width; ++x) {
      const int sx = x - dx;
      if (sx < 0 || sx >= image.width) continue;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = image.at(sx, sy, c);
    }
  }
  return out;
}

ImageBuffer rotate_image(const ImageBuffer& image, double degrees, std::uint8_t fill) {
  // Inverse of the point rotation used by rotate_box, sampled at pixel centres.
  const double theta = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double cx = image.width / 2.0;
  const double cy = image.height / 2.0;
  ImageBuffer out(image.width, image.height, fill);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double u = x + 0.5 - cx;
      const double v = y + 0.5 - cy;
      const double sx = cx + u * c - v * s;
      const double sy = cy + u * s + v * c;
      const int ix = static_cast<int>(std::floor(sx));
      const int iy = static_cast<int>(std::floor(sy));
      if (ix < 0 || iy < 0 || ix >= image.width || iy >= image.height) continue;
      for (int ch = 0; ch < 3; ++ch) out.at(x, y, ch) = image.at(ix, iy, ch);
    }
  }
  return out;
}

ImageBuffer adjust_brightness(const ImageBuffer& image, double factor) {
  ImageBuffer out = image;
  for (auto& v : out.data) v = saturate(v * factor);
  return out;
}

ImageBuffer adjust_contrast(const ImageBuffer& image, double factor) {
  double mean = 0.0;
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
  for (std::size_t i = 0; i < n; ++i) {
    mean += 0.299 * image.data[3 * i] + 0.587 * image.data[3 * i + 1] + 0.114 * image.data[3 * i + 2];
  }
  mean = n ? mean / static_cast<double>(n) : 0.0;
  ImageBuffer out = image;
  for (auto& v : out.data) v = saturate(mean + factor * (v - mean));
  return out;
}

ImageBuffer equalize(const ImageBuffer& image) {
  ImageBuffer out = image;
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
  for (int c = 0; c < 3; ++c) {
    std::array<std::uint64_t, 256> hist{};
    for (std::size_t i = 0; i < n; ++i) ++hist[image.data[3 * i + c]];
    std::array<std::uint64_t, 256> cdf{};
    std::uint64_t acc = 0;
    std::uint64_t cdf_min = 0;
    for (int v = 0; v < 256; ++v) {
      acc += hist[v];
      cdf[v] = acc;
      if (cdf_min == 0 && hist[v] > 0) cdf_min = acc;
    }
    const std::uint64_t denom = n - cdf_min;
    if (denom == 0) continue;  // single-valued channel
    std::array<std::uint8_t, 256> lut{};
    for (int v = 0; v < 256; ++v) {
      const std::uint64_t num = cdf[v] >= cdf_min ? cdf[v] - cdf_min : 0;
      lut[v] = static_cast<std::uint8_t>((num * 255 * 2 + denom) / (2 * denom));
    }
    for (std::size_t i = 0; i < n; ++i) out.data[3 * i + c] = lut[image.data[3 * i + c]];
  }
  return out;
}

namespace {

void check_inputs(const ImageBuffer& image, std::span<const GroundTruthBox> boxes) {
  if (!image.valid()) throw std::invalid_argument("image buffer size does not match its dimensions");
  for (const auto& gt : boxes) {
    const auto& b = gt.box;
    if (!b.valid() || b.xmax > image.width || b.ymax > image.height) {
      throw std::invalid_argument("box outside image");
    }
  }
}

// Clips every box to the image; returns how many vanished.
std::size_t clip_all(std::vector<GroundTruthBox>& boxes, const ImageBuffer& image) {
  std::size_t dropped = 0;
  std::vector<GroundTruthBox> kept;
  kept.reserve(boxes.size());
  for (const auto& gt : boxes) {
    if (auto c = clip_box(gt.box, image.width, image.height)) {
      kept.push_back({*c, gt.label});
    } else {
      ++dropped;
    }
  }
  boxes = std::move(kept);
  return dropped;
}

}  // namespace

AugmentResult apply_policy(const ImageBuffer& image, std::span<const GroundTruthBox> boxes, const AugPolicy& policy,
                           std::uint64_t seed) {
  validate_policy(policy);
  check_inputs(image, boxes);

  Rng rng(seed);
  AugmentResult result;
  result.sub_policy = rng.index(policy.sub_policies.size());
  result.image = image;
  result.boxes.assign(boxes.begin(), boxes.end());

  auto& img = result.image;
  auto& bx = result.boxes;
  for (const auto& spec : policy.sub_policies[result.sub_policy]) {
    if (!rng.bernoulli(spec.probability)) continue;
    AppliedTransform applied{spec.kind, spec.magnitude, 0.0, 0.0};
    switch (spec.kind) {
      case TransformKind::HFlip:
        img = hflip_image(img);
        for (auto& gt : bx) gt.box = flip_h(gt.box, img.width);
        break;
      case TransformKind::Resize: {
        const auto [w, h] = longer_side_size(img.width, img.height, static_cast<int>(std::lround(spec.magnitude)));
        const double sx = static_cast<double>(w) / img.width;
        const double sy = static_cast<double>(h) / img.height;
        img = resize_image(img, w, h);
        for (auto& gt : bx) gt.box = scale_box(gt.box, sx, sy);
        applied.magnitude = std::max(w, h);
        break;
      }
      case TransformKind::Translate: {
        const bool horizontal = rng.bernoulli(0.5);
        const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
        const double shift = sign * std::round(spec.magnitude);
        applied.dx = horizontal ? shift : 0.0;
        applied.dy = horizontal ? 0.0 : shift;
        img = translate_image(img, static_cast<int>(applied.dx), static_cast<int>(applied.dy));
        for (auto& gt : bx) gt.box = translate_box(gt.box, applied.dx, applied.dy);
        break;
      }
      case TransformKind::Rotate: {
        applied.magnitude = rng.bernoulli(0.5) ? spec.magnitude : -spec.magnitude;
        img = rotate_image(img, applied.magnitude);
        for (auto& gt : bx) gt.box = rotate_box(gt.box, applied.magnitude, img.width / 2.0, img.height / 2.0);
        break;
      }
      case TransformKind::Brightness: img = adjust_brightness(img, spec.magnitude); break;
      case TransformKind::Contrast: img = adjust_contrast(img, spec.magnitude); break;
      case TransformKind::Equalize: img = equalize(img); break;
    }
    if (is_geometric(spec.kind)) result.dropped_boxes += clip_all(bx, img);
    result.applied.push_back(applied);
  }
  return result;
}

PreprocessResult preprocess(const ImageBuffer& image, std::span<const GroundTruthBox> boxes,
                            const PreprocessOptions& options, std::uint64_t seed) {
  if (options.target_resolution <= 0) throw std::invalid_argument("preprocess: target resolution must be positive");
  check_inputs(image, boxes);

  Rng rng(seed);
  PreprocessResult result;
  result.normalization = options.normalization;
  result.image = image;
  result.boxes.assign(boxes.begin(), boxes.end());

  result.flipped = rng.bernoulli(options.hflip_probability);
  if (result.flipped) {
    result.image = hflip_image(result.image);
    for (auto& gt : result.boxes) gt.box = flip_h(gt.box, image.width);
  }

  const auto [w, h] = longer_side_size(image.width, image.height, options.target_resolution);
  if (w != image.width || h != image.height) {
    result.scale_x = static_cast<double>(w) / image.width;
    result.scale_y = static_cast<double>(h) / image.height;
    result.image = resize_image(result.image, w, h);
    for (auto& gt : result.boxes) gt.box = scale_box(gt.box, result.scale_x, result.scale_y);
    result.dropped_boxes = clip_all(result.boxes, result.image);
  }
  return result;
}

std::string format_boxes_csv(std::span<const GroundTruthBox> boxes) {
  std::string out = "class,xmin,ymin,xmax,ymax\n";
  for (const auto& gt : boxes) {
    out += class_name(gt.label);
    for (double v : {gt.box.xmin, gt.box.ymin, gt.box.xmax, gt.box.ymax}) {
      out += ',';
      out += detail::format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<GroundTruthBox> parse_boxes_csv(std::string_view text) {
  std::vector<GroundTruthBox> out;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line == "class,xmin,ymin,xmax,ymax") continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 5) throw ParseError("expected 5 fields", line_no);
    const auto label = class_from_name(detail::trim(fields[0]));
    if (!label) throw UnknownClass(std::string(fields[0]), line_no);
    double v[4];
    for (int i = 0; i < 4; ++i) {
      const auto x = detail::parse_double(fields[i + 1]);
      if (!x) throw ParseError("non-numeric coordinate", line_no);
      v[i] = *x;
    }
    BoundingBox box{v[0], v[1], v[2], v[3]};
    if (!box.valid()) throw InvalidBox("invalid box", line_no);
    out.push_back({box, *label});
  }
  return out;
}

std::vector<float> normalize(const ImageBuffer& image, const Normalization& norm) {
  std::vector<float> out(image.data.size());
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    const std::size_t c = i % 3;
    out[i] = static_cast<float>((image.data[i] - norm.mean[c]) / norm.stddev[c]);
  }
  return out;
}

}  // namespace rdd

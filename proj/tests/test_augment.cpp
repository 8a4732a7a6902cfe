#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "generators.hpp"
#include "rdd/augment.hpp"
#include "rdd/errors.hpp"
#include "rdd/geometry.hpp"

using namespace rdd;

namespace {

ImageBuffer random_image(proptest::Gen& g, int w, int h) {
  ImageBuffer img(w, h);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(g.integer(0, 255));
  return img;
}

std::vector<GroundTruthBox> random_boxes(proptest::Gen& g, int w, int h, int max_n) {
  std::vector<GroundTruthBox> out;
  const int n = g.integer(0, max_n);
  for (int i = 0; i < n; ++i) out.push_back({g.int_box(w, h), g.label()});
  return out;
}

TransformSpec random_spec(proptest::Gen& g, bool allow_rotate) {
  const int last = allow_rotate ? 6 : 5;
  const auto kind = static_cast<TransformKind>(g.integer(0, last));
  const auto range = magnitude_range(kind);
  double mag = g.real(range.min, range.max);
  if (kind == TransformKind::Resize) mag = g.integer(16, 96);
  if (kind == TransformKind::Translate) mag = g.integer(0, 30);
  return {kind, g.real(0.0, 1.0), mag};
}

AugPolicy random_policy(proptest::Gen& g, bool allow_rotate = true) {
  AugPolicy p{"random", {}, false};
  const int subs = g.integer(1, 4);
  for (int s = 0; s < subs; ++s) {
    SubPolicy sub;
    const int n = g.integer(0, 4);
    for (int i = 0; i < n; ++i) sub.push_back(random_spec(g, allow_rotate));
    p.sub_policies.push_back(sub);
  }
  return p;
}

bool contained(const BoundingBox& b, const ImageBuffer& img) {
  return b.valid() && b.xmin >= 0 && b.ymin >= 0 && b.xmax <= img.width && b.ymax <= img.height &&
         b.width() * b.height() >= 1.0;
}

// Re-applies the recorded geometric steps with the geometry functions alone.
std::vector<GroundTruthBox> replay(std::vector<GroundTruthBox> boxes, int w, int h,
                                   const std::vector<AppliedTransform>& steps) {
  for (const auto& s : steps) {
    if (!is_geometric(s.kind)) continue;
    for (auto& b : boxes) {
      switch (s.kind) {
        case TransformKind::HFlip: b.box = flip_h(b.box, w); break;
        case TransformKind::Translate: b.box = translate_box(b.box, s.dx, s.dy); break;
        case TransformKind::Rotate: b.box = rotate_box(b.box, s.magnitude, w / 2.0, h / 2.0); break;
        default: break;
      }
    }
    if (s.kind == TransformKind::Resize) {
      const auto [nw, nh] = longer_side_size(w, h, int(s.magnitude));
      for (auto& b : boxes) b.box = scale_box(b.box, double(nw) / w, double(nh) / h);
      w = nw;
      h = nh;
    }
    std::vector<GroundTruthBox> kept;
    for (const auto& b : boxes) {
      if (auto c = clip_box(b.box, w, h)) kept.push_back({*c, b.label});
    }
    boxes = kept;
  }
  return boxes;
}

const std::filesystem::path kPolicies = RDD_POLICY_DIR;

}  // namespace

TEST(Policy, StripRotation) {
  AugPolicy p{"p", {{{TransformKind::Rotate, 0.5, 10}, {TransformKind::Equalize, 0.5, 0}}}, false};
  const auto s = strip_rotation(p);
  ASSERT_EQ(s.sub_policies.size(), 1u);
  EXPECT_EQ(s.sub_policies[0], (SubPolicy{{TransformKind::Equalize, 0.5, 0}}));
  EXPECT_TRUE(s.rotation_free);
  EXPECT_FALSE(s.contains_rotation());
  EXPECT_EQ(strip_rotation(s), s);
}

TEST(Policy, ValidatorRejectsRotationInRotationFreePolicy) {
  AugPolicy p{"p", {{{TransformKind::Rotate, 0.5, 10}}}, true};
  EXPECT_THROW(validate_policy(p), InvalidPolicy);
  p.rotation_free = false;
  EXPECT_NO_THROW(validate_policy(p));
}

TEST(Policy, ValidatorRanges) {
  EXPECT_THROW(validate_policy({"p", {}, false}), InvalidPolicy);
  EXPECT_THROW(validate_policy({"p", {{{TransformKind::HFlip, 1.5, 0}}}, false}), InvalidPolicy);
  EXPECT_THROW(validate_policy({"p", {{{TransformKind::HFlip, 0.5, 1}}}, false}), InvalidPolicy);
  EXPECT_THROW(validate_policy({"p", {{{TransformKind::Rotate, 0.5, 91}}}, false}), InvalidPolicy);
  EXPECT_THROW(validate_policy({"p", {{{TransformKind::Resize, 0.5, 0}}}, false}), InvalidPolicy);
}

TEST(Policy, TextRoundTrip) {
  proptest::Gen g(61);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = random_policy(g);
    if (g.coin()) p = strip_rotation(p);
    EXPECT_EQ(parse_policy(format_policy(p)), p);
  }
}

TEST(Policy, ParseErrors) {
  EXPECT_THROW(parse_policy("Shear(0.5,3)\n"), ParseError);
  EXPECT_THROW(parse_policy("HFlip(0.5)\n"), ParseError);
  EXPECT_THROW(parse_policy("@bogus\nHFlip(0.5,0)\n"), ParseError);
  EXPECT_THROW(parse_policy("@rotation_free\nRotate(0.5,3)\n"), InvalidPolicy);
}

TEST(Policy, ShippedFilesLoadAndStrip) {
  for (int v = 0; v <= 3; ++v) {
    const auto p = load_policy(kPolicies / ("policy_v" + std::to_string(v) + ".txt"));
    EXPECT_EQ(p.name, "policy_v" + std::to_string(v));
    EXPECT_TRUE(p.contains_rotation());
    const auto s = strip_rotation(p);
    EXPECT_NO_THROW(validate_policy(s));
    EXPECT_EQ(s.sub_policies.size(), p.sub_policies.size());
  }
}

TEST(ApplyPolicy, HFlipAlwaysIsInvolution) {
  proptest::Gen g(62);
  const AugPolicy flip{"f", {{{TransformKind::HFlip, 1.0, 0}}}, true};
  for (int trial = 0; trial < 50; ++trial) {
    const auto img = random_image(g, g.integer(4, 40), g.integer(4, 40));
    const auto boxes = random_boxes(g, img.width, img.height, 6);
    const auto once = apply_policy(img, boxes, flip, g.seed());
    ASSERT_EQ(once.boxes.size(), boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      EXPECT_EQ(once.boxes[i].box, flip_h(boxes[i].box, img.width));
    }
    const auto twice = apply_policy(once.image, once.boxes, flip, g.seed());
    EXPECT_EQ(twice.boxes, boxes);
    EXPECT_EQ(twice.image, img);
  }
}

TEST(ApplyPolicy, PhotometricOnlyLeavesBoxes) {
  proptest::Gen g(63);
  const AugPolicy photo{"p",
                        {{{TransformKind::Brightness, 1.0, 1.4}, {TransformKind::Contrast, 1.0, 0.6},
                          {TransformKind::Equalize, 1.0, 0}}},
                        true};
  const auto img = random_image(g, 30, 20);
  const auto boxes = random_boxes(g, 30, 20, 6);
  const auto r = apply_policy(img, boxes, photo, 9);
  EXPECT_EQ(r.boxes, boxes);
  EXPECT_EQ(r.applied.size(), 3u);
}

TEST(ApplyPolicy, ResizeMatchesScaleBox) {
  const ImageBuffer img(600, 600, 50);
  const std::vector<GroundTruthBox> boxes{{{0, 0, 600, 600}, ClassLabel::D00}, {{10, 20, 110, 220}, ClassLabel::D40}};
  const AugPolicy resize{"r", {{{TransformKind::Resize, 1.0, 512}}}, true};
  const auto r = apply_policy(img, boxes, resize, 1);
  EXPECT_EQ(r.image.width, 512);
  EXPECT_EQ(r.image.height, 512);
  const double s = 512.0 / 600.0;
  for (std::size_t i = 0; i < boxes.size(); ++i) EXPECT_EQ(r.boxes[i].box, scale_box(boxes[i].box, s, s));
}

TEST(ApplyPolicy, RandomInvariants) {
  proptest::Gen g(64);
  for (int trial = 0; trial < 200; ++trial) {
    const auto img = random_image(g, g.integer(8, 48), g.integer(8, 48));
    const auto boxes = random_boxes(g, img.width, img.height, 6);
    const auto policy = random_policy(g);
    const auto seed = g.seed();
    const auto r = apply_policy(img, boxes, policy, seed);
    const auto again = apply_policy(img, boxes, policy, seed);
    EXPECT_EQ(r.image, again.image);
    EXPECT_EQ(r.boxes, again.boxes);
    EXPECT_EQ(r.boxes.size() + r.dropped_boxes, boxes.size());
    for (const auto& b : r.boxes) EXPECT_TRUE(contained(b.box, r.image)) << trial;
    EXPECT_EQ(r.boxes, replay(boxes, img.width, img.height, r.applied)) << trial;
    std::vector<ClassLabel> available;
    for (const auto& b : boxes) available.push_back(b.label);
    for (const auto& b : r.boxes) {
      const auto it = std::find(available.begin(), available.end(), b.label);
      ASSERT_NE(it, available.end());
      available.erase(it);
    }
  }
}

TEST(ApplyPolicy, RejectsBoxOutsideImage) {
  const ImageBuffer img(10, 10);
  const std::vector<GroundTruthBox> boxes{{{0, 0, 11, 5}, ClassLabel::D00}};
  EXPECT_THROW(apply_policy(img, boxes, {"f", {{{TransformKind::HFlip, 1.0, 0}}}, true}, 1), std::invalid_argument);
}

TEST(Preprocess, IdentityWhenNothingToDo) {
  proptest::Gen g(65);
  const auto img = random_image(g, 40, 30);
  const auto boxes = random_boxes(g, 40, 30, 5);
  PreprocessOptions o;
  o.target_resolution = 40;
  o.hflip_probability = 0.0;
  const auto r = preprocess(img, boxes, o, 3);
  EXPECT_EQ(r.image, img);
  EXPECT_EQ(r.boxes, boxes);
  EXPECT_FALSE(r.flipped);
  EXPECT_EQ(r.normalization, Normalization{});
}

TEST(Preprocess, ScalesToTarget) {
  const ImageBuffer img(600, 600, 10);
  const std::vector<GroundTruthBox> boxes{{{0, 0, 600, 600}, ClassLabel::D20}};
  PreprocessOptions o;
  o.hflip_probability = 0.0;
  const auto r = preprocess(img, boxes, o, 3);
  EXPECT_EQ(r.image.width, 512);
  EXPECT_EQ(r.boxes[0].box, (BoundingBox{0, 0, 512, 512}));
  const auto a = preprocess(img, boxes, PreprocessOptions{}, 77);
  const auto b = preprocess(img, boxes, PreprocessOptions{}, 77);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.boxes, b.boxes);
}

TEST(Normalize, AppliesMeanAndStd) {
  ImageBuffer img(1, 1);
  img.data = {124, 116, 104};
  const auto v = normalize(img, Normalization{});
  ASSERT_EQ(v.size(), 3u);
  EXPECT_NEAR(v[0], (124 - 123.675) / 58.395, 1e-6);
  EXPECT_NEAR(v[1], (116 - 116.28) / 57.12, 1e-6);
  EXPECT_NEAR(v[2], (104 - 103.53) / 57.375, 1e-6);
}

TEST(Equalize, ConstantImageUnchanged) {
  const ImageBuffer img(7, 5, 90);
  EXPECT_EQ(equalize(img), img);
}

TEST(Equalize, TwoLevelImageUnchanged) {
  ImageBuffer img(4, 4);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = (i / 3) % 2 ? 255 : 0;
  EXPECT_EQ(equalize(img), img);
}

TEST(Equalize, CdfWithinOneStepOfLinear) {
  proptest::Gen g(66);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = g.integer(2, 30), h = g.integer(2, 30);
    ImageBuffer img(w, h);
    const int lo = g.integer(0, 200), hi = g.integer(lo, 255);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(g.integer(lo, hi));
    const auto out = equalize(img);
    const double n = double(w) * h;
    for (int c = 0; c < 3; ++c) {
      std::array<double, 256> hist{};
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) ++hist[img.at(x, y, c)];
      }
      double cdf_min = 0;
      for (double v : hist) {
        if (v > 0) {
          cdf_min = v;
          break;
        }
      }
      if (cdf_min == n) continue;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double cdf = 0;
          for (int k = 0; k <= img.at(x, y, c); ++k) cdf += hist[std::size_t(k)];
          const double linear = (cdf - cdf_min) * 255.0 / (n - cdf_min);
          EXPECT_LE(std::abs(out.at(x, y, c) - linear), 1.0);
        }
      }
    }
  }
}

TEST(ImageOps, HFlipAndTranslate) {
  proptest::Gen g(67);
  const auto img = random_image(g, 9, 6);
  EXPECT_EQ(hflip_image(hflip_image(img)), img);
  const auto t = translate_image(img, 2, 1, 7);
  EXPECT_EQ(t.at(0, 0, 0), 7);
  EXPECT_EQ(t.at(2, 1, 1), img.at(0, 0, 1));
  EXPECT_EQ(rotate_image(img, 0.0), img);
}

TEST(ImageOps, LongerSide) {
  EXPECT_EQ(longer_side_size(1200, 600, 512), (std::array<int, 2>{512, 256}));
  EXPECT_EQ(longer_side_size(600, 1200, 512), (std::array<int, 2>{256, 512}));
}

TEST(BoxesCsv, RoundTrip) {
  proptest::Gen g(68);
  std::vector<GroundTruthBox> boxes;
  for (int i = 0; i < 20; ++i) boxes.push_back({g.real_box(300, 300), g.label()});
  EXPECT_EQ(parse_boxes_csv(format_boxes_csv(boxes)), boxes);
}

TEST(Png, RoundTrip) {
  proptest::Gen g(69);
  const auto img = random_image(g, 13, 7);
  const auto path = std::filesystem::temp_directory_path() / "rdd_png_roundtrip.png";
  write_png(path, img);
  EXPECT_EQ(read_png(path), img);
  std::filesystem::remove(path);
  EXPECT_THROW(read_png(path), Error);
}

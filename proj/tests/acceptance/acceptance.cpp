// Prints one line per acceptance criterion and exits nonzero if any failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "generators.hpp"
#include "oracles.hpp"
#include "rdd/augment.hpp"
#include "rdd/dataset_io.hpp"
#include "rdd/errors.hpp"
#include "rdd/geometry.hpp"
#include "rdd/metrics.hpp"
#include "rdd/model_config.hpp"
#include "rdd/postprocess.hpp"

using namespace rdd;
namespace fs = std::filesystem;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Line {
  int id;
  Verdict verdict;
  std::string detail;
};

int failures = 0;

void report(const Line& line) {
  const char* tag = line.verdict == Verdict::Pass ? "PASS" : line.verdict == Verdict::Fail ? "FAIL" : "SKIP";
  if (line.verdict == Verdict::Fail) ++failures;
  std::cout << "criterion " << std::setw(2) << line.id << "  " << tag << "  " << line.detail << std::endl;
}

std::string counts_text(const StatsTable& s) {
  std::ostringstream o;
  o << s.image_count << " images";
  for (auto l : kAllClasses) o << ", " << class_name(l) << "=" << s.class_counts[class_index(l)];
  return o.str();
}

bool matches(const StatsTable& s, std::size_t images, std::array<std::size_t, 4> counts) {
  return s.image_count == images && s.class_counts == counts;
}

Line dataset_statistics() {
  const auto fixture = dataset_stats(load_split(fs::path(RDD_FIXTURE_DIR) / "voc20", "voc20").split);
  const bool fixture_ok = matches(fixture, 20, {8, 7, 6, 8});
  std::string detail = "fixture " + counts_text(fixture) + (fixture_ok ? " (exact)" : " (expected 20, 8/7/6/8)");

  const char* train = std::getenv("RDD2020_TRAIN_DIR");
  const char* val = std::getenv("RDD2020_VAL_DIR");
  if (!train || !val) {
    detail += "; published splits not checked, set RDD2020_TRAIN_DIR and RDD2020_VAL_DIR";
    return {1, fixture_ok ? Verdict::Skip : Verdict::Fail, detail};
  }
  const auto t = dataset_stats(load_split(train, "train", ParseMode::Lenient).split);
  const auto v = dataset_stats(load_split(val, "val", ParseMode::Lenient).split);
  const bool train_ok = matches(t, 18930, {5918, 4014, 7535, 5103});
  const bool val_ok = matches(v, 2111, {674, 432, 846, 524});
  detail += "; train " + counts_text(t) + (train_ok ? " (exact)" : " (expected 18930, 5918/4014/7535/5103)");
  detail += "; val " + counts_text(v) + (val_ok ? " (exact)" : " (expected 2111, 674/432/846/524)");
  return {1, fixture_ok && train_ok && val_ok ? Verdict::Pass : Verdict::Fail, detail};
}

Line scaling() {
  const int res[] = {512, 640, 768, 896, 1024};
  const int head[] = {3, 3, 3, 4, 4};
  bool ok = true;
  for (int phi = 0; phi <= 4; ++phi) {
    const auto c = compound_config(phi);
    ok = ok && c.input_resolution == res[phi] && c.head_depth == head[phi];
  }
  const auto d7 = compound_config(7);
  ok = ok && d7.input_resolution == 1536 && d7.formula_resolution == 1408 && d7.resolution_overridden;
  return {2, ok ? Verdict::Pass : Verdict::Fail,
          "resolutions 512..1024 and head depths 3,3,3,4,4 for phi 0..4; phi 7 " +
              std::to_string(d7.input_resolution) + " vs formula " + std::to_string(d7.formula_resolution)};
}

Line metric_oracle() {
  const auto start = std::chrono::steady_clock::now();
  proptest::Gen g(20201);
  double worst = 0.0;
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto split = proptest::micro_split(g, 8, 6);
    const auto dets = proptest::micro_detections(g, split, 6);
    const auto rep = evaluate(split, dets);
    const auto ref = oracle::summarize(split, dets);
    const double err = std::max({std::abs(rep.prf.f1 - ref.f1), std::abs(rep.ap50 - ref.ap50),
                                 std::abs(rep.ap75 - ref.ap75), std::abs(rep.map - ref.map)});
    worst = std::max(worst, err);
    bad += err > 1e-9;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream o;
  o << "1000 micro-instances, max |diff| " << worst << ", " << bad << " over 1e-9, " << secs << " s";
  return {3, bad == 0 && secs < 30.0 ? Verdict::Pass : Verdict::Fail, o.str()};
}

Line raster_iou() {
  proptest::Gen g(20202);
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto a = g.int_box(64, 64), b = g.int_box(64, 64);
    bad += iou(a, b) != oracle::raster_iou(a, b, 64);
  }
  return {4, bad == 0 ? Verdict::Pass : Verdict::Fail,
          "10000 integer box pairs on 64x64, " + std::to_string(bad) + " mismatches"};
}

Line nms_properties() {
  proptest::Gen g(20203);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<Detection> d;
    const int n = g.integer(0, 20);
    for (int k = 0; k < n; ++k) {
      if (!d.empty() && g.coin(0.5)) {
        const auto& base = d[std::size_t(g.integer(0, int(d.size()) - 1))];
        d.push_back({g.jitter(base.box, 5.0), g.coin(0.8) ? base.label : g.label(), g.confidence()});
      } else {
        d.push_back({g.int_box(100, 100), g.label(), g.confidence()});
      }
    }
    const double thr = g.real(0.05, 1.0);
    const auto kept = nms(d, thr);
    bool ok = nms(kept, thr) == kept;
    for (const auto& k : kept) ok = ok && std::find(d.begin(), d.end(), k) != d.end();
    for (std::size_t a = 0; a < kept.size(); ++a) {
      for (std::size_t b = a + 1; b < kept.size(); ++b) {
        if (kept[a].label == kept[b].label) ok = ok && iou(kept[a].box, kept[b].box) < thr;
      }
    }
    bad += !ok;
  }
  return {5, bad == 0 ? Verdict::Pass : Verdict::Fail,
          "idempotence, subset, pairwise IoU over 1000 sets, " + std::to_string(bad) + " violations"};
}

Line sweep_optimality() {
  proptest::Gen g(20204);
  const auto grid = default_threshold_grid();
  int bad = 0;
  for (int i = 0; i < 200; ++i) {
    const auto split = proptest::micro_split(g, 8, 6);
    const auto dets = proptest::micro_detections(g, split, 6);
    const auto table = sweep_thresholds(split, dets, grid);
    std::vector<std::array<oracle::ClassCounts, kNumClasses>> at;
    for (double t : grid) at.push_back(oracle::class_counts_at(split, dets, t, 0.5));
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const auto& entry = table.classes.at(kAllClasses[c]);
      const auto pos = std::find(grid.begin(), grid.end(), entry.threshold);
      if (pos == grid.end()) {
        ++bad;
        continue;
      }
      const auto& chosen = at[std::size_t(pos - grid.begin())][c];
      bool optimal = true;
      for (const auto& row : at) optimal = optimal && oracle::compare_f1(row[c], chosen) <= 0;
      const auto denom = 2 * chosen.tp + chosen.fp + chosen.fn;
      const double f1 = chosen.tp ? double(2 * chosen.tp) / double(denom) : 0.0;
      bad += !optimal || f1 != entry.f1;
    }
  }
  return {6, bad == 0 ? Verdict::Pass : Verdict::Fail,
          "200 splits x 4 classes against exhaustive grid re-evaluation, " + std::to_string(bad) + " non-optimal"};
}

Line kmeans() {
  proptest::Gen g(20205);
  int bad = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<BoundingBox> boxes;
    const int n = g.integer(10, 200);
    for (int k = 0; k < n; ++k) boxes.push_back(g.real_box(600, 600, 2.0));
    const int k = g.integer(1, 8);
    const auto seed = g.seed();
    const auto a = kmeans_ratios(boxes, k, seed);
    const auto b = kmeans_ratios(boxes, k, seed);
    bool ok = a.ratios == b.ratios && a.objective_history == b.objective_history;
    for (std::size_t s = 1; s < a.objective_history.size(); ++s) {
      ok = ok && a.objective_history[s] <= a.objective_history[s - 1];
    }
    bad += !ok;
  }
  const std::vector<BoundingBox> four{{0, 0, 20, 40}, {0, 0, 20, 40}, {0, 0, 40, 20}, {0, 0, 40, 20}};
  const auto two = kmeans_ratios(four, 2, 7);
  const bool exact = two.ratios == std::vector<double>{0.5, 2.0};
  return {7, bad == 0 && exact ? Verdict::Pass : Verdict::Fail,
          "100 seeded runs repeated bit-identically with non-increasing objective (" + std::to_string(bad) +
              " bad); {0.5,0.5,2,2} k=2 -> " + format_ratios(two.ratios)};
}

Line augmentation() {
  proptest::Gen g(20206);
  int bad = 0;
  const AugPolicy flip{"flip", {{{TransformKind::HFlip, 1.0, 0}}}, true};
  for (int i = 0; i < 500; ++i) {
    const int w = g.integer(8, 64), h = g.integer(8, 64);
    ImageBuffer img(w, h);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(g.integer(0, 255));
    std::vector<GroundTruthBox> boxes;
    const int n = g.integer(0, 6);
    for (int k = 0; k < n; ++k) boxes.push_back({g.int_box(w, h), g.label()});
    const auto seed = g.seed();

    const auto once = apply_policy(img, boxes, flip, seed);
    const auto twice = apply_policy(once.image, once.boxes, flip, seed);
    bool ok = twice.boxes == boxes && twice.image == img;

    AugPolicy policy{"random", {}, false};
    const int subs = g.integer(1, 3);
    for (int s = 0; s < subs; ++s) {
      SubPolicy sub;
      const int specs = g.integer(1, 4);
      for (int k = 0; k < specs; ++k) {
        const auto kind = static_cast<TransformKind>(g.integer(0, 6));
        double mag = 0.0;
        if (kind == TransformKind::Resize) mag = g.integer(8, 96);
        if (kind == TransformKind::Translate) mag = g.integer(0, 20);
        if (kind == TransformKind::Brightness || kind == TransformKind::Contrast) mag = g.real(0, 2);
        if (kind == TransformKind::Rotate) mag = g.real(0, 90);
        sub.push_back({kind, g.real(0, 1), mag});
      }
      policy.sub_policies.push_back(sub);
    }
    const auto r = apply_policy(img, boxes, policy, seed);
    const auto r2 = apply_policy(img, boxes, policy, seed);
    ok = ok && r.image == r2.image && r.boxes == r2.boxes;
    std::vector<ClassLabel> pool;
    for (const auto& b : boxes) pool.push_back(b.label);
    for (const auto& b : r.boxes) {
      const auto it = std::find(pool.begin(), pool.end(), b.label);
      ok = ok && it != pool.end();
      if (it != pool.end()) pool.erase(it);
      ok = ok && b.box.xmin >= 0 && b.box.ymin >= 0 && b.box.xmax <= r.image.width &&
           b.box.ymax <= r.image.height && area(b.box) >= 1.0;
    }
    ok = ok && r.boxes.size() + r.dropped_boxes == boxes.size();

    auto stripped = strip_rotation(policy);
    ok = ok && !stripped.contains_rotation();
    try {
      validate_policy(stripped);
    } catch (const InvalidPolicy&) {
      ok = false;
    }
    stripped.sub_policies.back().push_back({TransformKind::Rotate, 0.5, 10});
    try {
      validate_policy(stripped);
      ok = false;
    } catch (const InvalidPolicy&) {
    }
    bad += !ok;
  }
  return {8, bad == 0 ? Verdict::Pass : Verdict::Fail,
          "500 (image, boxes, seed) triples: involution, labels, containment, determinism, rotation ban; " +
              std::to_string(bad) + " violations"};
}

Line round_trip() {
  proptest::Gen g(20207);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    DetectionMap m;
    const int images = g.integer(0, 8);
    for (int k = 0; k < images; ++k) {
      std::vector<Detection> list;
      const int n = g.integer(0, 8);
      for (int d = 0; d < n; ++d) {
        const double conf = g.coin(0.1) ? double(g.integer(0, 1)) : g.real(0.0, 1.0);
        list.push_back({g.int_box(2000, 1500), g.label(), conf});
      }
      m["Country_" + std::to_string(g.integer(0, 999999))] = list;
    }
    bad += parse_predictions(write_submission(m)) != m;
  }
  return {9, bad == 0 ? Verdict::Pass : Verdict::Fail,
          "1000 random detection maps, " + std::to_string(bad) + " differ after write then parse"};
}

}  // namespace

int main() {
  using Check = Line (*)();
  for (Check check : {dataset_statistics, scaling, metric_oracle, raster_iou, nms_properties, sweep_optimality,
                      kmeans, augmentation, round_trip}) {
    try {
      report(check());
    } catch (const std::exception& e) {
      report({0, Verdict::Fail, std::string("exception: ") + e.what()});
    }
  }
  report({10, Verdict::Skip,
          "not reproducible here: model F1 scores, augmentation deltas and inference timings need trained "
          "networks and the withheld test labels; criteria 3 to 8 stand in for them"});
  return failures == 0 ? 0 : 1;
}

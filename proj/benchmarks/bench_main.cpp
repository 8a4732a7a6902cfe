#include <benchmark/benchmark.h>

#include "generators.hpp"
#include "rdd/metrics.hpp"
#include "rdd/model_config.hpp"
#include "rdd/postprocess.hpp"

namespace {

rdd::DatasetSplit make_split(int images, int boxes) {
  rdd::proptest::Gen g(7);
  rdd::DatasetSplit split{"bench", {}};
  for (int i = 0; i < images; ++i) {
    rdd::ImageRecord r{"img_" + std::to_string(i), 600, 600, {}};
    for (int b = 0; b < boxes; ++b) r.boxes.push_back({g.int_box(600, 600), g.label()});
    split.records.push_back(std::move(r));
  }
  return split;
}

void BM_Evaluate(benchmark::State& state) {
  const auto split = make_split(static_cast<int>(state.range(0)), 6);
  rdd::proptest::Gen g(8);
  const auto dets = rdd::proptest::micro_detections(g, split, 12);
  for (auto _ : state) benchmark::DoNotOptimize(rdd::evaluate(split, dets));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Evaluate)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& state) {
  const auto split = make_split(static_cast<int>(state.range(0)), 6);
  rdd::proptest::Gen g(9);
  const auto dets = rdd::proptest::micro_detections(g, split, 12);
  const auto grid = rdd::default_threshold_grid();
  for (auto _ : state) benchmark::DoNotOptimize(rdd::sweep_thresholds(split, dets, grid));
}
BENCHMARK(BM_Sweep)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Nms(benchmark::State& state) {
  rdd::proptest::Gen g(10);
  std::vector<rdd::Detection> dets;
  for (int i = 0; i < state.range(0); ++i) dets.push_back({g.int_box(600, 600), g.label(), g.real(0, 1)});
  for (auto _ : state) benchmark::DoNotOptimize(rdd::nms(dets, 0.5));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Nms)->Arg(100)->Arg(1000);

void BM_KMeans(benchmark::State& state) {
  rdd::proptest::Gen g(11);
  std::vector<rdd::BoundingBox> boxes;
  for (int i = 0; i < state.range(0); ++i) boxes.push_back(g.real_box(512, 512, 2.0));
  for (auto _ : state) benchmark::DoNotOptimize(rdd::kmeans_ratios(boxes, 7, 1));
}
BENCHMARK(BM_KMeans)->Arg(1000)->Arg(25000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

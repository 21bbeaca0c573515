#include <benchmark/benchmark.h>

#include <vector>

#include "viewrank/roi.hpp"
#include "viewrank/toy/rng.hpp"
#include "viewrank/views.hpp"

namespace {

using namespace viewrank;

FeatureMap random_map(std::size_t c, std::size_t h, std::size_t w) {
  toy::Rng rng(7);
  FeatureMap m({c, h, w});
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

// Candidate windows from the default sliding-window grid.
const std::vector<Box>& candidates() {
  static const std::vector<Box> boxes = generate_candidates(SlidingWindowConfig{});
  return boxes;
}

void configure(benchmark::State& state, const std::vector<Box>& boxes) {
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * boxes.size()));
  state.counters["boxes"] = static_cast<double>(boxes.size());
}

void BM_Forward(benchmark::State& state, RoIKind kind) {
  const FeatureMap map = random_map(static_cast<std::size_t>(state.range(0)), 28, 28);
  const auto& boxes = candidates();
  const RoIConfig cfg = RoIConfig::defaults(kind);
  for (auto _ : state) benchmark::DoNotOptimize(roi_forward(map, boxes, cfg));
  configure(state, boxes);
}

void BM_Backward(benchmark::State& state, RoIKind kind) {
  const FeatureMap map = random_map(static_cast<std::size_t>(state.range(0)), 28, 28);
  const auto& boxes = candidates();
  const RoIConfig cfg = RoIConfig::defaults(kind);
  const std::size_t out = cfg.output_size;
  std::vector<FeatureMap> grads(boxes.size(), FeatureMap({map.channels(), out, out}, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(roi_backward(map, boxes, cfg, grads));
  configure(state, boxes);
}

void BM_Candidates(benchmark::State& state) {
  const SlidingWindowConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(generate_candidates(cfg));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Forward, pool, RoIKind::Pool)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Forward, align, RoIKind::Align)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Forward, warp, RoIKind::Warp)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Forward, refine, RoIKind::Refine)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Backward, pool, RoIKind::Pool)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Backward, align, RoIKind::Align)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Backward, warp, RoIKind::Warp)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Backward, refine, RoIKind::Refine)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Candidates)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();

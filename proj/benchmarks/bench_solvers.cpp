#include <benchmark/benchmark.h>

#include "bclean/beamforming.hpp"
#include "bclean/deconvolution.hpp"
#include "bclean/synthesis.hpp"

using namespace bclean;

namespace {

// Case 1 cut down to `bins` bins from 2 kHz so one iteration stays cheap.
struct Problem {
  SceneSpec scene;
  SpectralMatrixSet csm;
  SteeringSet steering;

  Problem(std::size_t mics, std::size_t bins)
      : scene(reduced(mics, bins)),
        csm(synthesize_csm(scene)),
        steering(scene.array, scene.grid, scene.freqs, scene.speed_of_sound) {}

  static SceneSpec reduced(std::size_t mics, std::size_t bins) {
    auto s = case1_scene(mics);
    s.freqs = FrequencyGrid::uniform(2048.0, 32.0, bins);
    s.sources.pop_back();
    return s;
  }
};

void BM_SteeringWeights(benchmark::State& state) {
  const Problem p(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(p.steering.weights(0));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(p.scene.grid.size()));
}
BENCHMARK(BM_SteeringWeights)->Arg(16)->Arg(64);

void BM_DirtyMap(benchmark::State& state) {
  const Problem p(static_cast<std::size_t>(state.range(0)), 8);
  for (auto _ : state) benchmark::DoNotOptimize(dirty_map(p.csm, p.steering, true));
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_DirtyMap)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_CleanSc(benchmark::State& state) {
  const Problem p(64, static_cast<std::size_t>(state.range(0)));
  const auto cfg = SolverConfig::clean_sc_defaults(2);
  for (auto _ : state) benchmark::DoNotOptimize(clean_sc(p.csm, p.steering, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CleanSc)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_BCleanSc(benchmark::State& state) {
  const Problem p(64, 32);
  auto cfg = SolverConfig::b_clean_sc_defaults(2, IntervalSpec::bins(static_cast<std::size_t>(state.range(0))));
  // Second argument: cache budget in MiB, 0 regenerates weights every time.
  cfg.steering_cache_bytes = static_cast<std::size_t>(state.range(1)) << 20;
  for (auto _ : state) benchmark::DoNotOptimize(b_clean_sc(p.csm, p.steering, cfg));
}
BENCHMARK(BM_BCleanSc)->Args({1, 2048})->Args({8, 2048})->Args({32, 2048})->Args({32, 0})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "citesim/generator.hpp"
#include "citesim/metrics.hpp"
#include "citesim/nullmodel.hpp"

using namespace citesim;

namespace {

GrowthConfig config_for_periods(std::int32_t periods) {
  GrowthConfig cfg;
  cfg.periods = periods;
  cfg.seed = 7;
  return cfg;
}

void BM_Grow(benchmark::State& state) {
  const auto cfg = config_for_periods(static_cast<std::int32_t>(state.range(0)));
  std::size_t edges = 0;
  for (auto _ : state) {
    const auto net = grow(cfg);
    edges = net.num_edges();
    benchmark::DoNotOptimize(net.num_papers());
  }
  state.counters["edges"] = static_cast<double>(edges);
}
BENCHMARK(BM_Grow)->Arg(60)->Arg(80)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ComputeCdAll(benchmark::State& state) {
  const auto net = grow(config_for_periods(static_cast<std::int32_t>(state.range(0))));
  std::size_t records = 0;
  for (auto _ : state) {
    const auto result = compute_cd_all(net, 5, 1);
    records = result.size();
    benchmark::DoNotOptimize(result.data());
  }
  state.counters["papers"] = static_cast<double>(net.num_papers());
  state.counters["records"] = static_cast<double>(records);
}
BENCHMARK(BM_ComputeCdAll)->Arg(60)->Arg(80)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Rewire(benchmark::State& state) {
  const auto net = grow(config_for_periods(static_cast<std::int32_t>(state.range(0))));
  RewireConfig cfg;
  cfg.seed = 11;
  for (auto _ : state) {
    const auto result = rewire(net, cfg);
    benchmark::DoNotOptimize(result.accepted);
  }
  state.counters["edges"] = static_cast<double>(net.num_edges());
}
BENCHMARK(BM_Rewire)->Arg(50)->Arg(70)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

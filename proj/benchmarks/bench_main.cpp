#include <benchmark/benchmark.h>

#include <random>

#include "driftqa/harness.hpp"
#include "driftqa/predictor.hpp"
#include "driftqa/random.hpp"
#include "driftqa/resample.hpp"

using namespace driftqa;

static void BM_PredictorFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng = make_rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(n);
  std::vector<std::uint8_t> o(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = u(rng);
    o[i] = u(rng) < s[i] ? 1 : 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(BinnedPredictor::fit(s, o, 10));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_PredictorFit)->Arg(1000)->Arg(100000);

static void BM_KMeans(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Matrix points(n, 8);
  Rng rng = make_rng(2);
  std::normal_distribution<double> g;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : points.row(i)) v = g(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(points, 10, 3));
}
BENCHMARK(BM_KMeans)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_RunSingle(benchmark::State& state) {
  const ExperimentConfig cfg;
  const Dataset ds = load_dataset(cfg);
  const SplitCondition cond = parse_condition(ds, cfg.split_condition);
  const BiasedSplit split = biased_split(ds, cond, 10, cfg.sizes, split_seed_for(cfg.seed, 10, 0));
  RunOptions opts;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_single(split, StrategyKind::AddDeletePrioritized, opts, 4));
  }
}
BENCHMARK(BM_RunSingle)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();

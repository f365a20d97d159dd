#include <benchmark/benchmark.h>

#include "gtpulse/dataset.hpp"
#include "gtpulse/models.hpp"

namespace {

using namespace gtpulse;

const Dataset& bench_data() {
  static const Dataset data = synth_dataset(4000, 16, 3, 4.0, 99);
  return data;
}

void BM_FitDecisionTree(benchmark::State& state) {
  ModelSpec spec;
  spec.params = TreeParams{static_cast<std::size_t>(state.range(0)), 1};
  for (auto _ : state) {
    auto model = fit(spec, bench_data());
    benchmark::DoNotOptimize(model.ok());
  }
}
BENCHMARK(BM_FitDecisionTree)->Arg(6)->Arg(12);

void BM_FitGradientBoost(benchmark::State& state) {
  ModelSpec spec;
  spec.params = BoostParams{static_cast<std::size_t>(state.range(0)), 0.2, 3, 1};
  for (auto _ : state) {
    auto model = fit(spec, bench_data());
    benchmark::DoNotOptimize(model.ok());
  }
}
BENCHMARK(BM_FitGradientBoost)->Arg(10)->Arg(25);

void BM_KnnPredict(benchmark::State& state) {
  ModelSpec spec;
  spec.params = KnnParams{5};
  static const TrainedModel model = fit(spec, bench_data()).value();
  Matrix queries(static_cast<std::size_t>(state.range(0)), 16);
  for (std::size_t i = 0; i < queries.data.size(); ++i) {
    queries.data[i] = static_cast<double>(i % 7);
  }
  for (auto _ : state) {
    auto probs = predict_proba(model, queries);
    benchmark::DoNotOptimize(probs.ok());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          state.range(0));
}
BENCHMARK(BM_KnnPredict)->Arg(10)->Arg(100);

}  // namespace

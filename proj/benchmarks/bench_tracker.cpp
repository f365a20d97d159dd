#include <benchmark/benchmark.h>

#include "gtpulse/flow_tracker.hpp"
#include "gtpulse/traffic_sim.hpp"

namespace {

using namespace gtpulse;

void BM_ObserveMatch(benchmark::State& state) {
  // One request/response pair per iteration pass.
  FlowTracker tracker;
  double now = 0.0;
  std::uint64_t corr = 0;
  Observation request;
  request.teid = Teid{1001};
  Observation response = request;
  response.direction = Direction::kDownlink;
  for (auto _ : state) {
    now += 0.0001;
    ++corr;
    request.timestamp = now;
    request.correlation_id = corr;
    response.timestamp = now + 0.00005;
    response.correlation_id = corr;
    benchmark::DoNotOptimize(tracker.observe(request));
    benchmark::DoNotOptimize(tracker.observe(response));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 2);
}
BENCHMARK(BM_ObserveMatch);

void BM_ReplayTrace(benchmark::State& state) {
  SimConfig config;
  config.duration_s = 10.0;
  config.request_rate_hz = 200.0;
  config.jitter_ms = 2.0;
  config.seed = 1;
  const SimOutput out = generate_trace(config, SinusoidalProfile{});
  for (auto _ : state) {
    const EstimationRun run = run_estimation(out.records);
    benchmark::DoNotOptimize(run.samples.size());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(out.records.size()));
}
BENCHMARK(BM_ReplayTrace);

void BM_WindowAggregate(benchmark::State& state) {
  std::vector<LatencySample> samples;
  for (int i = 0; i < 10000; ++i) {
    LatencySample s;
    s.completed_at = i * 0.01;
    s.total_ms = 20.0 + (i % 50);
    samples.push_back(s);
  }
  for (auto _ : state) {
    auto series = window_aggregate(samples, 1000.0);
    benchmark::DoNotOptimize(series.windows.size());
  }
}
BENCHMARK(BM_WindowAggregate);

}  // namespace

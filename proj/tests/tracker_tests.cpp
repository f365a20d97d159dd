#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "gtpulse/flow_tracker.hpp"
#include "gtpulse/rng.hpp"

using namespace gtpulse;

namespace {

Observation obs(double ts, Direction dir, std::uint32_t teid, std::uint64_t corr) {
  Observation o;
  o.timestamp = ts;
  o.direction = dir;
  o.teid = Teid{teid};
  o.correlation_id = corr;
  return o;
}

}  // namespace

TEST_CASE("time_shift_latency follows t_out - t_in") {
  auto latency = time_shift_latency(100.000, 100.0053);
  REQUIRE(latency.ok());
  CHECK(latency.value() == doctest::Approx(5.3).epsilon(1e-9));

  latency = time_shift_latency(42.0, 42.0);
  REQUIRE(latency.ok());
  CHECK(latency.value() == 0.0);

  CHECK(time_shift_latency(10.0, 9.0).code() == Errc::negative_interval);
}

TEST_CASE("total_latency is a plain sum and commutes") {
  CHECK(total_latency(5.3, 4.7) == doctest::Approx(10.0));
  CHECK(total_latency(0.0, 0.0) == 0.0);
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform(0.0, 500.0);
    const double b = rng.uniform(0.0, 500.0);
    CHECK(total_latency(a, b) == total_latency(b, a));
  }
}

TEST_CASE("request/response pair yields one sample") {
  FlowTracker tracker;
  auto first = tracker.observe(obs(1.000, Direction::kUplink, 42, 1));
  REQUIRE(first.ok());
  CHECK_FALSE(first.value().has_value());

  auto second = tracker.observe(obs(1.010, Direction::kDownlink, 42, 1));
  REQUIRE(second.ok());
  REQUIRE(second.value().has_value());
  const LatencySample sample = *second.value();
  CHECK(sample.total_ms == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(sample.request_leg_ms == sample.total_ms);
  CHECK(sample.response_leg_ms == 0.0);
  CHECK(sample.teid.value == 42);
  CHECK(sample.correlation_id == 1);
  CHECK(sample.completed_at == 1.010);
  CHECK(sample.total_ms == sample.request_leg_ms + sample.response_leg_ms);
  CHECK(tracker.pending_count() == 0);
  CHECK(tracker.conservation_holds());
}

TEST_CASE("downlink-initiated exchanges land on the response leg") {
  FlowTracker tracker;
  REQUIRE(tracker.observe(obs(2.0, Direction::kDownlink, 7, 9)).ok());
  auto done = tracker.observe(obs(2.004, Direction::kUplink, 7, 9));
  REQUIRE(done.ok());
  REQUIRE(done.value().has_value());
  CHECK(done.value()->response_leg_ms == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(done.value()->request_leg_ms == 0.0);
}

TEST_CASE("unmatched observation stays pending") {
  FlowTracker tracker;
  auto result = tracker.observe(obs(1.0, Direction::kUplink, 1, 5));
  REQUIRE(result.ok());
  CHECK_FALSE(result.value().has_value());
  CHECK(tracker.pending_count() == 1);
  CHECK(tracker.conservation_holds());
}

TEST_CASE("same-direction duplicates do not match each other") {
  FlowTracker tracker;
  REQUIRE(tracker.observe(obs(1.0, Direction::kUplink, 1, 5)).ok());
  auto dup = tracker.observe(obs(1.1, Direction::kUplink, 1, 5));
  REQUIRE(dup.ok());
  CHECK_FALSE(dup.value().has_value());
  CHECK(tracker.pending_count() == 2);
}

TEST_CASE("FIFO tie-break matches the oldest pending entry") {
  FlowTracker tracker;
  REQUIRE(tracker.observe(obs(1.0, Direction::kUplink, 1, 5)).ok());
  REQUIRE(tracker.observe(obs(1.020, Direction::kUplink, 1, 5)).ok());
  auto done = tracker.observe(obs(1.030, Direction::kDownlink, 1, 5));
  REQUIRE(done.ok());
  REQUIRE(done.value().has_value());
  CHECK(done.value()->total_ms == doctest::Approx(30.0).epsilon(1e-9));
  CHECK(tracker.pending_count() == 1);
}

TEST_CASE("mismatched inner flows do not pair") {
  FlowTracker tracker;
  Observation up = obs(1.0, Direction::kUplink, 1, 5);
  up.inner_flow = InnerFlowKey{0x0A000001, 0xC0A80001, 1000, 2000, 17};
  REQUIRE(tracker.observe(up).ok());

  Observation down = obs(1.01, Direction::kDownlink, 1, 5);
  down.inner_flow = InnerFlowKey{0xC0A80001, 0x0A000001, 2000, 3333, 17};
  auto result = tracker.observe(down);
  REQUIRE(result.ok());
  CHECK_FALSE(result.value().has_value());

  Observation good = obs(1.02, Direction::kDownlink, 1, 5);
  good.inner_flow = up.inner_flow.reversed();
  auto matched = tracker.observe(good);
  REQUIRE(matched.ok());
  CHECK(matched.value().has_value());
}

TEST_CASE("pending bound evicts oldest and reports overflow") {
  TrackerConfig config;
  config.max_pending_per_teid = 3;
  FlowTracker tracker(config);
  for (std::uint64_t i = 0; i < 3; ++i) {
    REQUIRE(tracker.observe(obs(1.0 + 0.001 * i, Direction::kUplink, 1, i)).ok());
  }
  auto overflow = tracker.observe(obs(1.01, Direction::kUplink, 1, 99));
  CHECK_FALSE(overflow.ok());
  CHECK(overflow.code() == Errc::pending_overflow);
  CHECK(tracker.pending_count() == 3);
  CHECK(tracker.stats().expired_entries == 1);
  CHECK(tracker.conservation_holds());

  // The evicted entry's counterpart is an orphan now.
  auto orphan = tracker.observe(obs(1.02, Direction::kDownlink, 1, 0));
  REQUIRE(orphan.ok());
  CHECK_FALSE(orphan.value().has_value());
  CHECK(tracker.stats().orphan_observations == 1);
  CHECK(tracker.conservation_holds());
}

TEST_CASE("flush_stale honors the strict age boundary") {
  TrackerConfig config;
  config.match_timeout_ms = 100.0;
  FlowTracker tracker(config);
  REQUIRE(tracker.observe(obs(0.0, Direction::kUplink, 1, 1)).ok());

  CHECK(tracker.flush_stale(0.099).empty());   // timeout - 1 ms
  CHECK(tracker.flush_stale(0.100).empty());   // exactly timeout: not older
  const auto expired = tracker.flush_stale(0.101);  // timeout + 1 ms
  REQUIRE(expired.size() == 1);
  CHECK(expired[0].correlation_id == 1);
  CHECK(expired[0].teid.value == 1);
  CHECK(tracker.pending_count() == 0);
  CHECK(tracker.conservation_holds());
}

TEST_CASE("flush on empty tracker is a no-op") {
  FlowTracker tracker;
  CHECK(tracker.flush_stale(1000.0).empty());
}

TEST_CASE("a response after expiry counts as an orphan") {
  TrackerConfig config;
  config.match_timeout_ms = 100.0;
  FlowTracker tracker(config);
  REQUIRE(tracker.observe(obs(0.0, Direction::kUplink, 1, 1)).ok());
  REQUIRE(tracker.flush_stale(0.2).size() == 1);

  auto result = tracker.observe(obs(0.21, Direction::kDownlink, 1, 1));
  REQUIRE(result.ok());
  CHECK_FALSE(result.value().has_value());
  CHECK(tracker.stats().orphan_observations == 1);
  CHECK(tracker.pending_count() == 0);
  CHECK(tracker.conservation_holds());
}

TEST_CASE("out-of-order beyond the tolerance is rejected") {
  FlowTracker tracker;  // 50 ms tolerance
  REQUIRE(tracker.observe(obs(1.000, Direction::kUplink, 1, 1)).ok());
  // 40 ms behind: accepted.
  auto ok = tracker.observe(obs(0.960, Direction::kUplink, 1, 2));
  CHECK(ok.ok());
  // 60 ms behind: rejected and not recorded.
  auto rejected = tracker.observe(obs(0.940, Direction::kUplink, 1, 3));
  CHECK_FALSE(rejected.ok());
  CHECK(rejected.code() == Errc::out_of_order);
  CHECK(tracker.stats().rejected_out_of_order == 1);
  CHECK(tracker.pending_count() == 2);
  CHECK(tracker.conservation_holds());
}

TEST_CASE("reordered counterpart clamps the gap at zero") {
  FlowTracker tracker;
  REQUIRE(tracker.observe(obs(1.000, Direction::kDownlink, 1, 1)).ok());
  auto done = tracker.observe(obs(0.980, Direction::kUplink, 1, 1));
  REQUIRE(done.ok());
  REQUIRE(done.value().has_value());
  CHECK(done.value()->total_ms == 0.0);
  CHECK(done.value()->request_leg_ms >= 0.0);
  CHECK(done.value()->response_leg_ms >= 0.0);
}

TEST_CASE("window_aggregate basic arithmetic") {
  std::vector<LatencySample> samples;
  LatencySample a;
  a.completed_at = 0.1;
  a.total_ms = 5.0;
  LatencySample b;
  b.completed_at = 0.7;
  b.total_ms = 15.0;
  samples = {a, b};

  const LatencySeries series = window_aggregate(samples, 1000.0);
  REQUIRE(series.windows.size() == 1);
  const WindowStats& w = series.windows.begin()->second;
  CHECK(w.mean_ms == doctest::Approx(10.0));
  CHECK(w.min_ms == 5.0);
  CHECK(w.max_ms == 15.0);
  CHECK(w.count == 2);
}

TEST_CASE("window_aggregate of nothing is empty") {
  CHECK(window_aggregate({}, 100.0).windows.empty());
}

TEST_CASE("window_aggregate matches a brute-force re-bucketing oracle") {
  Rng rng(333);
  std::vector<LatencySample> samples;
  for (int i = 0; i < 500; ++i) {
    LatencySample s;
    s.completed_at = rng.uniform(0.0, 3.0);
    s.total_ms = rng.uniform(1.0, 200.0);
    samples.push_back(s);
  }
  std::sort(samples.begin(), samples.end(),
            [](const LatencySample& a, const LatencySample& b) {
              return a.completed_at < b.completed_at;
            });

  const double window_ms = 250.0;
  const LatencySeries series = window_aggregate(samples, window_ms);

  // Oracle: independent accumulation per bucket.
  std::map<std::int64_t, std::vector<double>> buckets;
  for (const auto& s : samples) {
    buckets[static_cast<std::int64_t>(std::floor(s.completed_at * 1000.0 / window_ms))]
        .push_back(s.total_ms);
  }
  REQUIRE(series.windows.size() == buckets.size());
  std::size_t total = 0;
  for (const auto& [index, values] : buckets) {
    REQUIRE(series.windows.count(index) == 1);
    const WindowStats& w = series.windows.at(index);
    CHECK(w.count == values.size());
    total += w.count;
    double sum = 0.0;
    double lo = values[0];
    double hi = values[0];
    for (const double v : values) {
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(w.mean_ms == doctest::Approx(sum / values.size()).epsilon(1e-12));
    CHECK(w.min_ms == lo);
    CHECK(w.max_ms == hi);
  }
  CHECK(total == samples.size());
}

TEST_CASE("spanning three windows keeps the counts") {
  std::vector<LatencySample> samples;
  for (int i = 0; i < 9; ++i) {
    LatencySample s;
    s.completed_at = 0.35 * i;  // 0 .. 2.8 s
    s.total_ms = 10.0 + i;
    samples.push_back(s);
  }
  const LatencySeries series = window_aggregate(samples, 1000.0);
  CHECK(series.windows.size() == 3);
  std::size_t total = 0;
  for (const auto& [index, w] : series.windows) total += w.count;
  CHECK(total == samples.size());
}

TEST_CASE("every emitted sample satisfies the leg identity") {
  FlowTracker tracker;
  Rng rng(11);
  double now = 0.0;
  std::vector<LatencySample> samples;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    now += rng.uniform(0.0, 0.01);
    const Direction dir =
        rng.uniform() < 0.5 ? Direction::kUplink : Direction::kDownlink;
    const std::uint64_t corr = rng.below(300);
    auto result = tracker.observe(obs(now, dir, 1 + corr % 3, corr));
    if (result.ok() && result.value().has_value()) {
      samples.push_back(*result.value());
    }
  }
  for (const LatencySample& s : samples) {
    CHECK(s.total_ms == s.request_leg_ms + s.response_leg_ms);
    CHECK(s.request_leg_ms >= 0.0);
    CHECK(s.response_leg_ms >= 0.0);
  }
  CHECK(tracker.conservation_holds());
}

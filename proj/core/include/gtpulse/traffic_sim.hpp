#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gtpulse/flow_tracker.hpp"
#include "gtpulse/gtpu.hpp"
#include "gtpulse/result.hpp"

namespace gtpulse {

// Latency profile sweeping [min_ms, max_ms] once per period:
//   min + (max - min)/2 * (1 + sin(2*pi*t/period + phase))
struct SinusoidalProfile {
  double min_ms = 1.0;
  double max_ms = 600.0;
  double period_s = 30.0;
  double phase_rad = 0.0;
};

double profile_value(const SinusoidalProfile& profile, double t_s);

struct SimConfig {
  double duration_s = 600.0;
  double request_rate_hz = 60.0;
  std::vector<Teid> teids = {Teid{1001}};
  double jitter_ms = 0.0;   // stddev of additive Gaussian noise on the total
  double loss_prob = 0.0;   // applied to responses only
  std::uint64_t seed = 1;
};

struct TraceRecord {
  double timestamp = 0.0;  // seconds
  Direction direction = Direction::kUplink;
  std::vector<std::uint8_t> wire_bytes;  // a valid GTP-U packet
  std::uint64_t correlation_id = 0;
};

// One entry per generated request, including ones whose response was lost.
struct GroundTruthEntry {
  std::uint64_t correlation_id = 0;
  double send_time_s = 0.0;
  double injected_total_ms = 0.0;
  bool lost = false;
};

struct GroundTruth {
  std::vector<GroundTruthEntry> entries;
};

struct SimOutput {
  std::vector<TraceRecord> records;  // sorted by timestamp
  GroundTruth truth;
};

// Pure function of (config, profile): identical inputs give byte-identical
// traces. Each request i goes out at i / request_rate_hz; its response
// returns injected_total_ms later, where injected_total_ms is the profile
// value at send time plus clamped Gaussian jitter. Lost responses are
// recorded in the ground truth but absent from the trace.
SimOutput generate_trace(const SimConfig& config, const SinusoidalProfile& profile);

struct ReplaySummary {
  std::uint64_t delivered = 0;
  std::uint64_t failed = 0;  // CorruptRecord count
};

using ObservationSink = std::function<void(const Observation&)>;

// Decodes each record and delivers it in trace order. Records whose wire
// bytes fail to parse are skipped and counted.
ReplaySummary replay(const std::vector<TraceRecord>& trace,
                     const ObservationSink& sink);

// Convenience pipeline: replay a trace through a FlowTracker, flushing as
// trace time advances and draining stragglers at the end.
struct EstimationRun {
  std::vector<LatencySample> samples;
  std::vector<ExpiredEntry> expired;
  TrackerStats stats;
  std::uint64_t replay_failed = 0;
};

EstimationRun run_estimation(const std::vector<TraceRecord>& trace,
                             const TrackerConfig& tracker_config = {});

// Trace file: JSON Lines, one record per line:
//   {"v":1,"ts":<float seconds>,"dir":"UL"|"DL","corr":<int>,"bytes":"<base64>"}
Status write_trace_file(const std::vector<TraceRecord>& records,
                        const std::string& path);
Result<std::vector<TraceRecord>> read_trace_file(const std::string& path);

// Ground truth: CSV with a "# format_version=1" comment line, then the
// header corr,send_ts,injected_ms,lost.
Status write_ground_truth_file(const GroundTruth& truth, const std::string& path);
Result<GroundTruth> read_ground_truth_file(const std::string& path);

}  // namespace gtpulse

#include "gtpulse/traffic_sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gtpulse/io_util.hpp"
#include "gtpulse/rng.hpp"
#include "gtpulse/version.hpp"

namespace gtpulse {

namespace {

using nlohmann::json;

constexpr std::uint32_t kServerAddr = 0xCB00710A;  // 203.0.113.10
constexpr std::uint16_t kServerPort = 7777;
constexpr std::size_t kRequestPayloadSize = 32;

std::uint32_t ue_addr_for(Teid teid) {
  // 10.0.0.0/8, low TEID bits spread over the host part.
  return 0x0A000000u | (teid.value & 0x00FFFFFFu);
}

std::uint16_t ue_port_for(Teid teid) {
  return static_cast<std::uint16_t>(40000 + teid.value % 1000);
}

std::size_t request_count(double duration_s, double rate_hz) {
  const double x = duration_s * rate_hz;
  const double rounded = std::round(x);
  if (std::abs(x - rounded) < 1e-9) return static_cast<std::size_t>(rounded);
  return static_cast<std::size_t>(std::ceil(x));
}

}  // namespace

double profile_value(const SinusoidalProfile& profile, double t_s) {
  assert(profile.max_ms > profile.min_ms && profile.min_ms > 0.0);
  assert(profile.period_s > 0.0);
  const double arg =
      2.0 * std::numbers::pi * t_s / profile.period_s + profile.phase_rad;
  return profile.min_ms +
         (profile.max_ms - profile.min_ms) / 2.0 * (1.0 + std::sin(arg));
}

SimOutput generate_trace(const SimConfig& config, const SinusoidalProfile& profile) {
  assert(config.duration_s > 0.0);
  assert(config.request_rate_hz > 0.0);
  assert(config.loss_prob >= 0.0 && config.loss_prob < 1.0);
  assert(!config.teids.empty());

  Rng rng(config.seed);
  const std::size_t n = request_count(config.duration_s, config.request_rate_hz);

  SimOutput out;
  out.records.reserve(2 * n);
  out.truth.entries.reserve(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double t_send = static_cast<double>(i) / config.request_rate_hz;
    const Teid teid = config.teids[i % config.teids.size()];
    const std::uint32_t ue = ue_addr_for(teid);
    const std::uint16_t ue_port = ue_port_for(teid);

    // Draw order per request is fixed (jitter, then loss) and draws are
    // skipped entirely when the knob is off, so noiseless traces do not
    // depend on the generator at all.
    double injected_ms = profile_value(profile, t_send);
    if (config.jitter_ms > 0.0) {
      injected_ms += rng.gaussian(0.0, config.jitter_ms);
    }
    injected_ms = std::max(0.0, injected_ms);
    const bool lost = config.loss_prob > 0.0 && rng.uniform() < config.loss_prob;

    auto request_wire = encode_gtpu(make_gpdu(
        teid, make_inner_ipv4(ue, kServerAddr, ue_port, kServerPort, 17,
                              kRequestPayloadSize)));
    assert(request_wire.ok());
    out.records.push_back(TraceRecord{t_send, Direction::kUplink,
                                      std::move(request_wire).value(), i});

    if (!lost) {
      const double t_recv = t_send + injected_ms / 1000.0;
      auto response_wire = encode_gtpu(make_gpdu(
          teid, make_inner_ipv4(kServerAddr, ue, kServerPort, ue_port, 17,
                                kRequestPayloadSize)));
      assert(response_wire.ok());
      out.records.push_back(TraceRecord{t_recv, Direction::kDownlink,
                                        std::move(response_wire).value(), i});
    }
    out.truth.entries.push_back(GroundTruthEntry{i, t_send, injected_ms, lost});
  }

  // Responses interleave with later requests; ties keep generation order.
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const TraceRecord& a, const TraceRecord& b) {
                     return a.timestamp < b.timestamp;
                   });
  return out;
}

ReplaySummary replay(const std::vector<TraceRecord>& trace,
                     const ObservationSink& sink) {
  ReplaySummary summary;
  for (const TraceRecord& record : trace) {
    const auto parsed = parse_gtpu(record.wire_bytes);
    if (!parsed.ok()) {
      ++summary.failed;
      continue;
    }
    Observation obs;
    obs.timestamp = record.timestamp;
    obs.direction = record.direction;
    obs.teid = parsed.value().header.teid;
    obs.inner_flow = parsed.value().inner_flow.value_or(InnerFlowKey{});
    obs.correlation_id = record.correlation_id;
    sink(obs);
    ++summary.delivered;
  }
  return summary;
}

EstimationRun run_estimation(const std::vector<TraceRecord>& trace,
                             const TrackerConfig& tracker_config) {
  FlowTracker tracker(tracker_config);
  EstimationRun run;
  double last_flush = 0.0;
  double last_ts = 0.0;

  const ReplaySummary summary =
      replay(trace, [&](const Observation& obs) {
        last_ts = std::max(last_ts, obs.timestamp);
        if (obs.timestamp - last_flush >= 1.0) {
          auto expired = tracker.flush_stale(obs.timestamp);
          run.expired.insert(run.expired.end(), expired.begin(), expired.end());
          last_flush = obs.timestamp;
        }
        auto result = tracker.observe(obs);
        if (result.ok() && result.value().has_value()) {
          run.samples.push_back(*result.value());
        }
      });
  run.replay_failed = summary.failed;

  // Drain: everything still pending is older than the timeout by then.
  auto expired = tracker.flush_stale(
      last_ts + 2.0 * tracker.config().match_timeout_ms / 1000.0 + 1.0);
  run.expired.insert(run.expired.end(), expired.begin(), expired.end());
  run.stats = tracker.stats();
  return run;
}

Status write_trace_file(const std::vector<TraceRecord>& records,
                        const std::string& path) {
  std::ostringstream out;
  for (const TraceRecord& record : records) {
    json line;
    line["v"] = kTraceFormatVersion;
    line["ts"] = record.timestamp;
    line["dir"] = record.direction == Direction::kUplink ? "UL" : "DL";
    line["corr"] = record.correlation_id;
    line["bytes"] = base64_encode(record.wire_bytes);
    out << line.dump() << '\n';
  }
  return write_file(path, out.str());
}

Result<std::vector<TraceRecord>> read_trace_file(const std::string& path) {
  auto content = read_file(path);
  if (!content.ok()) return content.error();

  std::vector<TraceRecord> records;
  std::istringstream in(content.value());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json parsed = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("ts") ||
        !parsed.contains("dir") || !parsed.contains("corr") ||
        !parsed.contains("bytes")) {
      return make_error(Errc::corrupt_record,
                        path + ":" + std::to_string(line_no) + ": bad trace line");
    }
    TraceRecord record;
    record.timestamp = parsed["ts"].get<double>();
    const std::string dir = parsed["dir"].get<std::string>();
    if (dir == "UL") {
      record.direction = Direction::kUplink;
    } else if (dir == "DL") {
      record.direction = Direction::kDownlink;
    } else {
      return make_error(Errc::corrupt_record,
                        path + ":" + std::to_string(line_no) + ": bad direction");
    }
    record.correlation_id = parsed["corr"].get<std::uint64_t>();
    auto bytes = base64_decode(parsed["bytes"].get<std::string>());
    if (!bytes) {
      return make_error(Errc::corrupt_record,
                        path + ":" + std::to_string(line_no) + ": bad base64");
    }
    record.wire_bytes = std::move(*bytes);
    records.push_back(std::move(record));
  }
  return records;
}

Status write_ground_truth_file(const GroundTruth& truth, const std::string& path) {
  std::ostringstream out;
  out << "# format_version=" << kGroundTruthFormatVersion << '\n';
  out << "corr,send_ts,injected_ms,lost\n";
  for (const GroundTruthEntry& entry : truth.entries) {
    out << entry.correlation_id << ',' << format_double(entry.send_time_s) << ','
        << format_double(entry.injected_total_ms) << ',' << (entry.lost ? 1 : 0)
        << '\n';
  }
  return write_file(path, out.str());
}

Result<GroundTruth> read_ground_truth_file(const std::string& path) {
  auto content = read_file(path);
  if (!content.ok()) return content.error();

  GroundTruth truth;
  std::istringstream in(content.value());
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (csv_split(line) !=
          std::vector<std::string>{"corr", "send_ts", "injected_ms", "lost"}) {
        return make_error(Errc::corrupt_record, path + ": unexpected header");
      }
      header_seen = true;
      continue;
    }
    const auto fields = csv_split(line);
    if (fields.size() != 4) {
      return make_error(Errc::corrupt_record,
                        path + ":" + std::to_string(line_no) + ": bad row");
    }
    try {
      GroundTruthEntry entry;
      entry.correlation_id = std::stoull(fields[0]);
      entry.send_time_s = std::stod(fields[1]);
      entry.injected_total_ms = std::stod(fields[2]);
      entry.lost = fields[3] == "1";
      truth.entries.push_back(entry);
    } catch (const std::exception&) {
      return make_error(Errc::corrupt_record,
                        path + ":" + std::to_string(line_no) + ": bad number");
    }
  }
  if (!header_seen) {
    return make_error(Errc::corrupt_record, path + ": missing header");
  }
  return truth;
}

}  // namespace gtpulse

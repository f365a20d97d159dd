#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "gtpulse/gtpu.hpp"
#include "gtpulse/models.hpp"
#include "gtpulse/result.hpp"

namespace gtpulse {

// One aggregated latency window for a TEID, as submitted by the reporter.
struct LatencyReport {
  Teid teid{};
  double window_start = 0.0;  // seconds, reporter clock
  double mean_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  std::size_t sample_count = 0;
  std::optional<std::vector<double>> features;
};

// Invariant check used by both the core and the HTTP layer.
Status validate_report(const LatencyReport& report);

struct Classification {
  std::string game;
  double confidence = 0.0;  // argmax probability
};

enum class Verdict { kHealthy, kDegraded };

struct Decision {
  Teid teid{};
  Verdict verdict = Verdict::kHealthy;
  std::string game;
  double confidence = 0.0;
  double breach_fraction = 0.0;  // observed share of over-budget windows
  double threshold = 0.0;        // policy breach fraction
  double budget_ms = 0.0;
  std::size_t windows_considered = 0;
  double issued_at = 0.0;  // report-time clock
};

std::string decision_to_json(const Decision& decision);
Result<Decision> decision_from_json(const std::string& text);
std::string report_to_json(const LatencyReport& report);
Result<LatencyReport> report_from_json(const std::string& text);

// A window breaches when its mean strictly exceeds the class budget; the
// session is degraded when at least breach_fraction of the considered
// windows breach.
struct DegradationPolicy {
  std::map<std::string, double> budgets_ms;  // per game class
  double default_budget_ms = 100.0;
  double breach_fraction = 0.5;
  std::size_t min_windows = 4;
  double cooldown_s = 30.0;

  double budget_for(const std::string& game) const {
    const auto it = budgets_ms.find(game);
    return it == budgets_ms.end() ? default_budget_ms : it->second;
  }
};

// Latency statistics computed over a session's report ring, padded or
// truncated to `dim`. Used when reports carry no explicit feature vector;
// models consumed by the service must be trained on the same layout:
//   0 mean of window means      8 p90 of window means
//   1 stddev of window means    9 spread of window means
//   2 min of window mins       10 mean of per-window (max - min)
//   3 max of window maxs       11 total sample count
//   4 p10 of window means      12 mean sample count
//   5 p25 of window means      13 last window mean
//   6 p50 of window means      14 first window mean
//   7 p75 of window means      15 mean change per window
std::vector<double> derive_latency_features(
    const std::deque<LatencyReport>& ring, std::size_t dim);

struct SessionCounters {
  std::uint64_t reports_ingested = 0;
  std::uint64_t notifications_sent = 0;
  std::uint64_t notifications_suppressed = 0;
  std::uint64_t notifications_failed = 0;
};

struct SessionSnapshot {
  Teid teid{};
  std::size_t report_count = 0;  // currently held in the ring
  double first_window = 0.0;
  double last_window = 0.0;
  std::optional<Classification> classification;
  std::optional<Decision> last_decision;
  SessionCounters counters;
};

// POSTs a Degraded decision to {endpoint}/v1/notifications. At-most-once: a
// transport failure or non-2xx status is surfaced, never retried.
Result<int> notify_smf(const Decision& decision, const std::string& endpoint);

struct AnalyticsConfig {
  std::size_t ring_capacity = 32;
  DegradationPolicy policy;
  std::string smf_url;      // empty disables notification delivery
  bool auto_decide = true;  // classify/detect/notify on ingest
};

// Session store and decision logic, independent of the HTTP layer. All
// public calls are serialized internally; one TEID's state only ever
// advances in report order.
class AnalyticsCore {
 public:
  explicit AnalyticsCore(AnalyticsConfig config);

  void load_model(TrainedModel model);
  bool has_model() const;

  // Appends to the TEID's ring (dropping the oldest window at capacity) and,
  // in auto mode, runs the classify/detect/notify chain once enough windows
  // accumulated.
  Status ingest_report(const LatencyReport& report);

  Result<Classification> classify_session(Teid teid);
  Result<Decision> detect_degradation(Teid teid);
  Result<Decision> detect_degradation(Teid teid, const DegradationPolicy& policy);

  Result<SessionSnapshot> session(Teid teid) const;
  std::vector<SessionSnapshot> dump_sessions() const;
  const AnalyticsConfig& config() const { return config_; }

 private:
  struct SessionState {
    std::deque<LatencyReport> ring;
    std::optional<Classification> classification;
    std::optional<Decision> last_decision;
    std::optional<double> last_notified_at;
    SessionCounters counters;
  };

  Result<Classification> classify_locked(Teid teid, SessionState& state);
  Result<Decision> detect_locked(Teid teid, SessionState& state,
                                 const DegradationPolicy& policy);
  void auto_decide_locked(Teid teid, SessionState& state);
  SessionSnapshot snapshot_locked(Teid teid, const SessionState& state) const;

  AnalyticsConfig config_;
  std::optional<TrainedModel> model_;
  std::map<std::uint32_t, SessionState> sessions_;
  mutable std::mutex mutex_;
};

// HTTP front end:
//   POST /v1/reports          LatencyReport body -> 202
//   GET  /v1/sessions         JSON dump of all sessions
//   GET  /v1/sessions/{teid}  session summary -> 200/404
//   POST /v1/classify/{teid}  -> 200, 404 unknown, 409 insufficient data,
//                                503 no model
//   GET  /healthz
class AnalyticsServer {
 public:
  AnalyticsServer(std::shared_ptr<AnalyticsCore> core, std::string host,
                  int port);
  ~AnalyticsServer();

  AnalyticsServer(const AnalyticsServer&) = delete;
  AnalyticsServer& operator=(const AnalyticsServer&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port.
  Status start();
  void stop();
  int port() const;
  std::shared_ptr<AnalyticsCore> core() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Stand-in for the session management function: accepts
// POST /v1/notifications, remembers every body, optionally appends them as
// JSON lines to a log file.
class SmfStub {
 public:
  SmfStub(std::string host, int port, std::string log_path = {});
  ~SmfStub();

  SmfStub(const SmfStub&) = delete;
  SmfStub& operator=(const SmfStub&) = delete;

  Status start();
  void stop();
  int port() const;
  std::string url() const;
  std::vector<std::string> notifications() const;
  std::size_t notification_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Service configuration file (JSON object) with environment overrides:
//   listen (host:port)        GTPULSE_LISTEN
//   model_path                GTPULSE_MODEL_PATH
//   smf_url                   GTPULSE_SMF_URL
//   auto_decide               GTPULSE_AUTO_DECIDE
//   ring_capacity             GTPULSE_RING_CAPACITY
//   policy.default_budget_ms  GTPULSE_DEFAULT_BUDGET_MS
//   policy.budgets_ms         (file only)
//   policy.breach_fraction    GTPULSE_BREACH_FRACTION
//   policy.min_windows        GTPULSE_MIN_WINDOWS
//   policy.cooldown_s         GTPULSE_COOLDOWN_S
struct ServiceConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::string model_path;
  AnalyticsConfig analytics;
};

Result<ServiceConfig> load_service_config(const std::string& path);
Result<ServiceConfig> service_config_from_json(const std::string& text);

}  // namespace gtpulse

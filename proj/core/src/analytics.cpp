#include "gtpulse/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gtpulse/io_util.hpp"
#include "gtpulse/version.hpp"

namespace gtpulse {

namespace {

using nlohmann::json;

bool finite(double v) { return std::isfinite(v); }

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  if (sorted.size() == 1) return sorted[0];
  const double rank = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - std::floor(rank);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

Status validate_report(const LatencyReport& report) {
  if (!finite(report.window_start) || !finite(report.mean_ms) ||
      !finite(report.min_ms) || !finite(report.max_ms)) {
    return make_error(Errc::malformed_report, "non-finite field");
  }
  if (report.min_ms < 0.0) {
    return make_error(Errc::malformed_report, "negative latency");
  }
  if (report.min_ms > report.mean_ms || report.mean_ms > report.max_ms) {
    return make_error(Errc::malformed_report,
                      "expected min_ms <= mean_ms <= max_ms");
  }
  if (report.sample_count < 1) {
    return make_error(Errc::malformed_report, "sample_count must be >= 1");
  }
  if (report.features) {
    for (const double v : *report.features) {
      if (!finite(v)) {
        return make_error(Errc::malformed_report, "non-finite feature");
      }
    }
  }
  return {};
}

std::string report_to_json(const LatencyReport& report) {
  json doc;
  doc["teid"] = report.teid.value;
  doc["window_start"] = report.window_start;
  doc["mean_ms"] = report.mean_ms;
  doc["min_ms"] = report.min_ms;
  doc["max_ms"] = report.max_ms;
  doc["sample_count"] = report.sample_count;
  if (report.features) doc["features"] = *report.features;
  return doc.dump();
}

Result<LatencyReport> report_from_json(const std::string& text) {
  const json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    return make_error(Errc::malformed_report, "body is not a JSON object");
  }
  LatencyReport report;
  try {
    report.teid = Teid{doc.at("teid").get<std::uint32_t>()};
    report.window_start = doc.at("window_start").get<double>();
    report.mean_ms = doc.at("mean_ms").get<double>();
    report.min_ms = doc.at("min_ms").get<double>();
    report.max_ms = doc.at("max_ms").get<double>();
    report.sample_count = doc.at("sample_count").get<std::size_t>();
    if (doc.contains("features")) {
      report.features = doc.at("features").get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    return make_error(Errc::malformed_report, e.what());
  }
  if (auto valid = validate_report(report); !valid.ok()) return valid.error();
  return report;
}

std::string decision_to_json(const Decision& decision) {
  json doc;
  doc["format_version"] = kReportFormatVersion;
  doc["teid"] = decision.teid.value;
  doc["verdict"] = decision.verdict == Verdict::kDegraded ? "degraded" : "healthy";
  doc["game"] = decision.game;
  doc["confidence"] = decision.confidence;
  doc["breach_fraction"] = decision.breach_fraction;
  doc["threshold"] = decision.threshold;
  doc["budget_ms"] = decision.budget_ms;
  doc["windows_considered"] = decision.windows_considered;
  doc["issued_at"] = decision.issued_at;
  return doc.dump();
}

Result<Decision> decision_from_json(const std::string& text) {
  const json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    return make_error(Errc::bad_config, "decision is not a JSON object");
  }
  Decision decision;
  try {
    decision.teid = Teid{doc.at("teid").get<std::uint32_t>()};
    decision.verdict = doc.at("verdict").get<std::string>() == "degraded"
                           ? Verdict::kDegraded
                           : Verdict::kHealthy;
    decision.game = doc.at("game").get<std::string>();
    decision.confidence = doc.at("confidence").get<double>();
    decision.breach_fraction = doc.at("breach_fraction").get<double>();
    decision.threshold = doc.at("threshold").get<double>();
    decision.budget_ms = doc.at("budget_ms").get<double>();
    decision.windows_considered = doc.at("windows_considered").get<std::size_t>();
    decision.issued_at = doc.at("issued_at").get<double>();
  } catch (const json::exception& e) {
    return make_error(Errc::bad_config, e.what());
  }
  return decision;
}

std::vector<double> derive_latency_features(const std::deque<LatencyReport>& ring,
                                            std::size_t dim) {
  std::vector<double> stats(16, 0.0);
  if (!ring.empty()) {
    std::vector<double> means;
    means.reserve(ring.size());
    double min_of_mins = ring.front().min_ms;
    double max_of_maxs = ring.front().max_ms;
    double span_sum = 0.0;
    double count_sum = 0.0;
    for (const LatencyReport& r : ring) {
      means.push_back(r.mean_ms);
      min_of_mins = std::min(min_of_mins, r.min_ms);
      max_of_maxs = std::max(max_of_maxs, r.max_ms);
      span_sum += r.max_ms - r.min_ms;
      count_sum += static_cast<double>(r.sample_count);
    }
    const double n = static_cast<double>(ring.size());
    const double mean =
        std::accumulate(means.begin(), means.end(), 0.0) / n;
    double var = 0.0;
    for (const double m : means) var += (m - mean) * (m - mean);
    var /= n;

    std::vector<double> sorted = means;
    std::sort(sorted.begin(), sorted.end());

    stats[0] = mean;
    stats[1] = std::sqrt(var);
    stats[2] = min_of_mins;
    stats[3] = max_of_maxs;
    stats[4] = percentile(sorted, 0.10);
    stats[5] = percentile(sorted, 0.25);
    stats[6] = percentile(sorted, 0.50);
    stats[7] = percentile(sorted, 0.75);
    stats[8] = percentile(sorted, 0.90);
    stats[9] = sorted.back() - sorted.front();
    stats[10] = span_sum / n;
    stats[11] = count_sum;
    stats[12] = count_sum / n;
    stats[13] = means.back();
    stats[14] = means.front();
    stats[15] = ring.size() > 1
                    ? (means.back() - means.front()) / (n - 1.0)
                    : 0.0;
  }
  stats.resize(dim, 0.0);
  return stats;
}

Result<int> notify_smf(const Decision& decision, const std::string& endpoint) {
  httplib::Client client(endpoint);
  client.set_connection_timeout(2, 0);
  client.set_read_timeout(5, 0);
  const auto response =
      client.Post("/v1/notifications", decision_to_json(decision), "application/json");
  if (!response) {
    return make_error(Errc::endpoint_unreachable,
                      endpoint + ": " + httplib::to_string(response.error()));
  }
  if (response->status < 200 || response->status >= 300) {
    return make_error(Errc::non_2xx_response,
                      endpoint + " returned " + std::to_string(response->status));
  }
  return response->status;
}

AnalyticsCore::AnalyticsCore(AnalyticsConfig config) : config_(std::move(config)) {}

void AnalyticsCore::load_model(TrainedModel model) {
  std::lock_guard lock(mutex_);
  model_ = std::move(model);
}

bool AnalyticsCore::has_model() const {
  std::lock_guard lock(mutex_);
  return model_.has_value();
}

Status AnalyticsCore::ingest_report(const LatencyReport& report) {
  if (auto valid = validate_report(report); !valid.ok()) return valid.error();
  std::lock_guard lock(mutex_);
  SessionState& state = sessions_[report.teid.value];
  state.ring.push_back(report);
  while (state.ring.size() > config_.ring_capacity) {
    state.ring.pop_front();
  }
  ++state.counters.reports_ingested;
  if (config_.auto_decide) {
    auto_decide_locked(report.teid, state);
  }
  return {};
}

Result<Classification> AnalyticsCore::classify_locked(Teid teid,
                                                      SessionState& state) {
  if (!model_) {
    return make_error(Errc::no_model_loaded, "no model loaded");
  }
  if (state.ring.size() < config_.policy.min_windows) {
    return make_error(Errc::insufficient_data,
                      "session " + std::to_string(teid.value) + " has " +
                          std::to_string(state.ring.size()) + " of " +
                          std::to_string(config_.policy.min_windows) +
                          " required windows");
  }

  // Explicit feature vectors win; otherwise fall back to latency statistics
  // derived from the ring.
  std::vector<double> features;
  std::size_t carrying = 0;
  for (const LatencyReport& r : state.ring) {
    if (r.features && r.features->size() == model_->feature_count) {
      if (features.empty()) features.assign(model_->feature_count, 0.0);
      for (std::size_t i = 0; i < features.size(); ++i) {
        features[i] += (*r.features)[i];
      }
      ++carrying;
    }
  }
  if (carrying > 0) {
    for (double& v : features) v /= static_cast<double>(carrying);
  } else {
    features = derive_latency_features(state.ring, model_->feature_count);
  }

  Matrix row(1, model_->feature_count);
  std::copy(features.begin(), features.end(), row.row(0));
  auto probs = predict_proba(*model_, row);
  if (!probs.ok()) return probs.error();

  std::size_t best = 0;
  for (std::size_t c = 1; c < probs.value().cols; ++c) {
    if (probs.value().at(0, c) > probs.value().at(0, best)) best = c;
  }
  Classification result{model_->class_names[best], probs.value().at(0, best)};
  state.classification = result;
  return result;
}

Result<Classification> AnalyticsCore::classify_session(Teid teid) {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(teid.value);
  if (it == sessions_.end()) {
    return make_error(Errc::unknown_teid,
                      "no session for TEID " + std::to_string(teid.value));
  }
  return classify_locked(teid, it->second);
}

Result<Decision> AnalyticsCore::detect_locked(Teid teid, SessionState& state,
                                              const DegradationPolicy& policy) {
  if (state.ring.size() < policy.min_windows) {
    return make_error(Errc::insufficient_data,
                      "need " + std::to_string(policy.min_windows) + " windows");
  }
  if (!state.classification) {
    return make_error(Errc::unclassified,
                      "session " + std::to_string(teid.value) +
                          " has no classification yet");
  }

  const double budget = policy.budget_for(state.classification->game);
  std::size_t breaches = 0;
  for (const LatencyReport& r : state.ring) {
    // Strict: a window sitting exactly at the budget is not a breach.
    if (r.mean_ms > budget) ++breaches;
  }
  const double observed =
      static_cast<double>(breaches) / static_cast<double>(state.ring.size());

  Decision decision;
  decision.teid = teid;
  decision.verdict =
      observed >= policy.breach_fraction ? Verdict::kDegraded : Verdict::kHealthy;
  decision.game = state.classification->game;
  decision.confidence = state.classification->confidence;
  decision.breach_fraction = observed;
  decision.threshold = policy.breach_fraction;
  decision.budget_ms = budget;
  decision.windows_considered = state.ring.size();
  decision.issued_at = state.ring.back().window_start;
  state.last_decision = decision;
  return decision;
}

Result<Decision> AnalyticsCore::detect_degradation(Teid teid) {
  return detect_degradation(teid, config_.policy);
}

Result<Decision> AnalyticsCore::detect_degradation(Teid teid,
                                                   const DegradationPolicy& policy) {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(teid.value);
  if (it == sessions_.end()) {
    return make_error(Errc::unknown_teid,
                      "no session for TEID " + std::to_string(teid.value));
  }
  return detect_locked(teid, it->second, policy);
}

void AnalyticsCore::auto_decide_locked(Teid teid, SessionState& state) {
  if (!model_ || state.ring.size() < config_.policy.min_windows) return;
  auto classified = classify_locked(teid, state);
  if (!classified.ok()) return;
  auto decision = detect_locked(teid, state, config_.policy);
  if (!decision.ok() || decision.value().verdict != Verdict::kDegraded) return;
  if (config_.smf_url.empty()) return;

  // Cooldown is measured on the report-time clock, which keeps replayed
  // traces deterministic.
  const double now = decision.value().issued_at;
  if (state.last_notified_at &&
      now - *state.last_notified_at < config_.policy.cooldown_s) {
    ++state.counters.notifications_suppressed;
    return;
  }
  auto delivery = notify_smf(decision.value(), config_.smf_url);
  if (delivery.ok()) {
    state.last_notified_at = now;
    ++state.counters.notifications_sent;
  } else {
    ++state.counters.notifications_failed;
  }
}

SessionSnapshot AnalyticsCore::snapshot_locked(Teid teid,
                                               const SessionState& state) const {
  SessionSnapshot snap;
  snap.teid = teid;
  snap.report_count = state.ring.size();
  if (!state.ring.empty()) {
    snap.first_window = state.ring.front().window_start;
    snap.last_window = state.ring.back().window_start;
  }
  snap.classification = state.classification;
  snap.last_decision = state.last_decision;
  snap.counters = state.counters;
  return snap;
}

Result<SessionSnapshot> AnalyticsCore::session(Teid teid) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(teid.value);
  if (it == sessions_.end()) {
    return make_error(Errc::unknown_teid,
                      "no session for TEID " + std::to_string(teid.value));
  }
  return snapshot_locked(teid, it->second);
}

std::vector<SessionSnapshot> AnalyticsCore::dump_sessions() const {
  std::lock_guard lock(mutex_);
  std::vector<SessionSnapshot> out;
  out.reserve(sessions_.size());
  for (const auto& [teid, state] : sessions_) {
    out.push_back(snapshot_locked(Teid{teid}, state));
  }
  return out;
}

namespace {

json snapshot_to_json(const SessionSnapshot& snap) {
  json doc;
  doc["teid"] = snap.teid.value;
  doc["report_count"] = snap.report_count;
  doc["first_window"] = snap.first_window;
  doc["last_window"] = snap.last_window;
  if (snap.classification) {
    doc["classification"] = {{"game", snap.classification->game},
                             {"confidence", snap.classification->confidence}};
  } else {
    doc["classification"] = nullptr;
  }
  if (snap.last_decision) {
    doc["last_decision"] = json::parse(decision_to_json(*snap.last_decision));
  } else {
    doc["last_decision"] = nullptr;
  }
  doc["notifications_sent"] = snap.counters.notifications_sent;
  doc["notifications_suppressed"] = snap.counters.notifications_suppressed;
  doc["notifications_failed"] = snap.counters.notifications_failed;
  doc["reports_ingested"] = snap.counters.reports_ingested;
  return doc;
}

std::optional<std::uint32_t> parse_teid_path(const std::string& text) {
  if (text.empty() || text.size() > 10) return std::nullopt;
  std::uint64_t value = 0;
  for (const char c : text) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + static_cast<std::uint64_t>(c - '0');
    if (value > 0xffffffffULL) return std::nullopt;
  }
  return static_cast<std::uint32_t>(value);
}

}  // namespace

struct AnalyticsServer::Impl {
  std::shared_ptr<AnalyticsCore> core;
  std::string host;
  int requested_port;
  int bound_port = -1;
  httplib::Server server;
  std::thread thread;

  void route() {
    server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      json doc{{"status", "ok"},
               {"version", kVersion},
               {"model_loaded", core->has_model()}};
      res.set_content(doc.dump(), "application/json");
    });

    server.Post("/v1/reports", [this](const httplib::Request& req,
                                      httplib::Response& res) {
      auto report = report_from_json(req.body);
      if (!report.ok()) {
        res.status = 400;
        res.set_content(json{{"error", report.error().message}}.dump(),
                        "application/json");
        return;
      }
      if (auto status = core->ingest_report(report.value()); !status.ok()) {
        res.status = 400;
        res.set_content(json{{"error", status.error().message}}.dump(),
                        "application/json");
        return;
      }
      res.status = 202;
      res.set_content(json{{"status", "accepted"}}.dump(), "application/json");
    });

    server.Get("/v1/sessions", [this](const httplib::Request&,
                                      httplib::Response& res) {
      json sessions = json::array();
      for (const SessionSnapshot& snap : core->dump_sessions()) {
        sessions.push_back(snapshot_to_json(snap));
      }
      res.set_content(json{{"sessions", std::move(sessions)}}.dump(),
                      "application/json");
    });

    server.Get(R"(/v1/sessions/(\d+))", [this](const httplib::Request& req,
                                               httplib::Response& res) {
      const auto teid = parse_teid_path(req.matches[1]);
      if (!teid) {
        res.status = 404;
        return;
      }
      auto snap = core->session(Teid{*teid});
      if (!snap.ok()) {
        res.status = 404;
        res.set_content(json{{"error", snap.error().message}}.dump(),
                        "application/json");
        return;
      }
      res.set_content(snapshot_to_json(snap.value()).dump(), "application/json");
    });

    server.Post(R"(/v1/classify/(\d+))", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      const auto teid = parse_teid_path(req.matches[1]);
      if (!teid) {
        res.status = 404;
        return;
      }
      auto classified = core->classify_session(Teid{*teid});
      if (!classified.ok()) {
        switch (classified.code()) {
          case Errc::unknown_teid: res.status = 404; break;
          case Errc::insufficient_data: res.status = 409; break;
          case Errc::no_model_loaded: res.status = 503; break;
          default: res.status = 500; break;
        }
        res.set_content(json{{"error", classified.error().message}}.dump(),
                        "application/json");
        return;
      }
      json doc{{"game", classified.value().game},
               {"confidence", classified.value().confidence}};
      res.set_content(doc.dump(), "application/json");
    });
  }
};

AnalyticsServer::AnalyticsServer(std::shared_ptr<AnalyticsCore> core,
                                 std::string host, int port)
    : impl_(std::make_unique<Impl>()) {
  impl_->core = std::move(core);
  impl_->host = std::move(host);
  impl_->requested_port = port;
}

AnalyticsServer::~AnalyticsServer() { stop(); }

Status AnalyticsServer::start() {
  impl_->route();
  if (impl_->requested_port == 0) {
    impl_->bound_port = impl_->server.bind_to_any_port(impl_->host);
    if (impl_->bound_port < 0) {
      return make_error(Errc::io_error, "failed to bind " + impl_->host);
    }
  } else {
    if (!impl_->server.bind_to_port(impl_->host, impl_->requested_port)) {
      return make_error(Errc::io_error,
                        "failed to bind " + impl_->host + ":" +
                            std::to_string(impl_->requested_port));
    }
    impl_->bound_port = impl_->requested_port;
  }
  impl_->thread = std::thread([this]() { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return {};
}

void AnalyticsServer::stop() {
  if (impl_ && impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
}

int AnalyticsServer::port() const { return impl_->bound_port; }

std::shared_ptr<AnalyticsCore> AnalyticsServer::core() const {
  return impl_->core;
}

struct SmfStub::Impl {
  std::string host;
  int requested_port;
  int bound_port = -1;
  std::string log_path;
  httplib::Server server;
  std::thread thread;
  mutable std::mutex mutex;
  std::vector<std::string> received;

  void route() {
    server.Post("/v1/notifications", [this](const httplib::Request& req,
                                            httplib::Response& res) {
      {
        std::lock_guard lock(mutex);
        received.push_back(req.body);
        if (!log_path.empty()) {
          std::ofstream out(log_path, std::ios::app);
          out << req.body << '\n';
        }
      }
      res.status = 204;
    });
  }
};

SmfStub::SmfStub(std::string host, int port, std::string log_path)
    : impl_(std::make_unique<Impl>()) {
  impl_->host = std::move(host);
  impl_->requested_port = port;
  impl_->log_path = std::move(log_path);
}

SmfStub::~SmfStub() { stop(); }

Status SmfStub::start() {
  impl_->route();
  if (impl_->requested_port == 0) {
    impl_->bound_port = impl_->server.bind_to_any_port(impl_->host);
    if (impl_->bound_port < 0) {
      return make_error(Errc::io_error, "failed to bind " + impl_->host);
    }
  } else {
    if (!impl_->server.bind_to_port(impl_->host, impl_->requested_port)) {
      return make_error(Errc::io_error,
                        "failed to bind " + impl_->host + ":" +
                            std::to_string(impl_->requested_port));
    }
    impl_->bound_port = impl_->requested_port;
  }
  impl_->thread = std::thread([this]() { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return {};
}

void SmfStub::stop() {
  if (impl_ && impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
}

int SmfStub::port() const { return impl_->bound_port; }

std::string SmfStub::url() const {
  return "http://" + impl_->host + ":" + std::to_string(impl_->bound_port);
}

std::vector<std::string> SmfStub::notifications() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->received;
}

std::size_t SmfStub::notification_count() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->received.size();
}

namespace {

std::optional<std::string> env_value(const char* name) {
  const char* value = std::getenv(name);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

Result<std::pair<std::string, int>> split_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == listen.size()) {
    return make_error(Errc::bad_config, "listen must be host:port");
  }
  try {
    const int port = std::stoi(listen.substr(colon + 1));
    if (port < 0 || port > 65535) {
      return make_error(Errc::bad_config, "listen port out of range");
    }
    return std::make_pair(listen.substr(0, colon), port);
  } catch (const std::exception&) {
    return make_error(Errc::bad_config, "listen port is not a number");
  }
}

}  // namespace

Result<ServiceConfig> service_config_from_json(const std::string& text) {
  const json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    return make_error(Errc::bad_config, "service config is not a JSON object");
  }
  ServiceConfig config;
  try {
    std::string listen = doc.value("listen", "127.0.0.1:8080");
    if (const auto env = env_value("GTPULSE_LISTEN")) listen = *env;
    auto split = split_listen(listen);
    if (!split.ok()) return split.error();
    config.listen_host = split.value().first;
    config.listen_port = split.value().second;

    config.model_path = doc.value("model_path", "");
    if (const auto env = env_value("GTPULSE_MODEL_PATH")) config.model_path = *env;

    config.analytics.smf_url = doc.value("smf_url", "");
    if (const auto env = env_value("GTPULSE_SMF_URL")) {
      config.analytics.smf_url = *env;
    }
    config.analytics.auto_decide = doc.value("auto_decide", true);
    if (const auto env = env_value("GTPULSE_AUTO_DECIDE")) {
      config.analytics.auto_decide = *env == "1" || *env == "true";
    }
    config.analytics.ring_capacity = doc.value("ring_capacity", std::size_t{32});
    if (const auto env = env_value("GTPULSE_RING_CAPACITY")) {
      config.analytics.ring_capacity = std::stoul(*env);
    }

    DegradationPolicy& policy = config.analytics.policy;
    if (doc.contains("policy")) {
      const json& p = doc.at("policy");
      policy.default_budget_ms = p.value("default_budget_ms", 100.0);
      policy.breach_fraction = p.value("breach_fraction", 0.5);
      policy.min_windows = p.value("min_windows", std::size_t{4});
      policy.cooldown_s = p.value("cooldown_s", 30.0);
      if (p.contains("budgets_ms")) {
        for (const auto& [game, budget] : p.at("budgets_ms").items()) {
          policy.budgets_ms[game] = budget.get<double>();
        }
      }
    }
    if (const auto env = env_value("GTPULSE_DEFAULT_BUDGET_MS")) {
      policy.default_budget_ms = std::stod(*env);
    }
    if (const auto env = env_value("GTPULSE_BREACH_FRACTION")) {
      policy.breach_fraction = std::stod(*env);
    }
    if (const auto env = env_value("GTPULSE_MIN_WINDOWS")) {
      policy.min_windows = std::stoul(*env);
    }
    if (const auto env = env_value("GTPULSE_COOLDOWN_S")) {
      policy.cooldown_s = std::stod(*env);
    }
  } catch (const std::exception& e) {
    return make_error(Errc::bad_config, std::string("service config: ") + e.what());
  }

  if (config.analytics.ring_capacity < 1) {
    return make_error(Errc::bad_config, "ring_capacity must be >= 1");
  }
  const DegradationPolicy& policy = config.analytics.policy;
  if (policy.default_budget_ms <= 0.0 || policy.min_windows < 1 ||
      policy.breach_fraction <= 0.0 || policy.breach_fraction > 1.0 ||
      policy.cooldown_s < 0.0) {
    return make_error(Errc::bad_config, "invalid degradation policy");
  }
  for (const auto& [game, budget] : policy.budgets_ms) {
    if (budget <= 0.0) {
      return make_error(Errc::bad_config, "budget for " + game + " must be > 0");
    }
  }
  return config;
}

Result<ServiceConfig> load_service_config(const std::string& path) {
  auto content = read_file(path);
  if (!content.ok()) return content.error();
  return service_config_from_json(content.value());
}

}  // namespace gtpulse

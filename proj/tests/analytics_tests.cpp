#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gtpulse/analytics.hpp"
#include "gtpulse/dataset.hpp"
#include "gtpulse/io_util.hpp"
#include "gtpulse/models.hpp"

using namespace gtpulse;
using nlohmann::json;

namespace {

LatencyReport report(std::uint32_t teid, double window_start, double mean,
                     double lo, double hi, std::size_t count = 10) {
  LatencyReport r;
  r.teid = Teid{teid};
  r.window_start = window_start;
  r.mean_ms = mean;
  r.min_ms = lo;
  r.max_ms = hi;
  r.sample_count = count;
  return r;
}

AnalyticsConfig config_with(std::size_t ring, std::size_t min_windows,
                            double budget = 100.0, double breach = 0.5) {
  AnalyticsConfig config;
  config.ring_capacity = ring;
  config.auto_decide = false;
  config.policy.default_budget_ms = budget;
  config.policy.breach_fraction = breach;
  config.policy.min_windows = min_windows;
  config.policy.cooldown_s = 30.0;
  return config;
}

// Model trained on rows drawn at the synthetic centroids' feature layout.
TrainedModel centroid_model(std::size_t dim) {
  const Dataset train = synth_dataset(600, dim, 3, 8.0, 4242);
  ModelSpec spec;
  spec.params = KnnParams{5};
  auto model = fit(spec, train);
  REQUIRE(model.ok());
  return model.value();
}

}  // namespace

TEST_CASE("ingest creates sessions and bounds the ring") {
  AnalyticsCore core(config_with(1, 4));
  REQUIRE(core.ingest_report(report(42, 0.0, 10, 5, 20)).ok());
  auto snap = core.session(Teid{42});
  REQUIRE(snap.ok());
  CHECK(snap.value().report_count == 1);
  CHECK(snap.value().counters.reports_ingested == 1);

  REQUIRE(core.ingest_report(report(42, 1.0, 30, 25, 35)).ok());
  snap = core.session(Teid{42});
  REQUIRE(snap.ok());
  CHECK(snap.value().report_count == 1);  // capacity 1 keeps the newer
  CHECK(snap.value().first_window == 1.0);
}

TEST_CASE("malformed reports are rejected and leave no session") {
  AnalyticsCore core(config_with(8, 4));
  LatencyReport bad = report(7, 0.0, 10, 50, 20);  // min > mean
  CHECK(core.ingest_report(bad).code() == Errc::malformed_report);
  CHECK(core.session(Teid{7}).code() == Errc::unknown_teid);

  bad = report(7, 0.0, 10, 5, 20, 0);  // zero samples
  CHECK(core.ingest_report(bad).code() == Errc::malformed_report);

  bad = report(7, 0.0, 10, 5, 20);
  bad.features = std::vector<double>{1.0, std::nan("")};
  CHECK(core.ingest_report(bad).code() == Errc::malformed_report);
}

TEST_CASE("classification requires session, data, and a model") {
  AnalyticsCore core(config_with(8, 2));
  CHECK(core.classify_session(Teid{1}).code() == Errc::unknown_teid);

  REQUIRE(core.ingest_report(report(1, 0.0, 10, 5, 20)).ok());
  CHECK(core.classify_session(Teid{1}).code() == Errc::no_model_loaded);

  core.load_model(centroid_model(16));
  CHECK(core.classify_session(Teid{1}).code() == Errc::insufficient_data);

  REQUIRE(core.ingest_report(report(1, 1.0, 12, 6, 22)).ok());
  auto classified = core.classify_session(Teid{1});
  REQUIRE(classified.ok());
  CHECK(classified.value().confidence >= 0.0);
  CHECK(classified.value().confidence <= 1.0);
}

TEST_CASE("features at a synthetic centroid classify confidently") {
  AnalyticsCore core(config_with(8, 2));
  const std::size_t dim = 16;
  core.load_model(centroid_model(dim));

  // Class 1 centroid in the synthetic layout: separation on axis 1.
  std::vector<double> features(dim, 0.0);
  features[1] = 8.0;
  for (int i = 0; i < 3; ++i) {
    LatencyReport r = report(9, static_cast<double>(i), 10, 5, 20);
    r.features = features;
    REQUIRE(core.ingest_report(r).ok());
  }
  auto classified = core.classify_session(Teid{9});
  REQUIRE(classified.ok());
  CHECK(classified.value().game == "TFT");
  CHECK(classified.value().confidence > 0.9);

  // Idempotent between ingests.
  auto again = core.classify_session(Teid{9});
  REQUIRE(again.ok());
  CHECK(again.value().game == classified.value().game);
  CHECK(again.value().confidence == classified.value().confidence);
}

TEST_CASE("derived latency features have the documented layout") {
  std::deque<LatencyReport> ring;
  ring.push_back(report(1, 0.0, 10, 5, 15, 2));
  ring.push_back(report(1, 1.0, 20, 10, 30, 4));
  ring.push_back(report(1, 2.0, 30, 20, 40, 6));

  const auto f = derive_latency_features(ring, 16);
  REQUIRE(f.size() == 16);
  CHECK(f[0] == doctest::Approx(20.0));                  // mean of means
  CHECK(f[1] == doctest::Approx(std::sqrt(200.0 / 3)));  // population stddev
  CHECK(f[2] == 5.0);                                    // min of mins
  CHECK(f[3] == 40.0);                                   // max of maxs
  CHECK(f[6] == doctest::Approx(20.0));                  // median of means
  CHECK(f[9] == doctest::Approx(20.0));                  // spread
  CHECK(f[10] == doctest::Approx(10.0 + 20.0 / 3.0));    // mean span
  CHECK(f[11] == 12.0);                                  // total samples
  CHECK(f[12] == 4.0);                                   // mean samples
  CHECK(f[13] == 30.0);                                  // last mean
  CHECK(f[14] == 10.0);                                  // first mean
  CHECK(f[15] == doctest::Approx(10.0));                 // slope

  const auto padded = derive_latency_features(ring, 20);
  CHECK(padded.size() == 20);
  CHECK(padded[19] == 0.0);
  const auto truncated = derive_latency_features(ring, 4);
  CHECK(truncated.size() == 4);
}

TEST_CASE("degradation verdict follows the breach fraction") {
  AnalyticsCore core(config_with(8, 4, 50.0, 0.5));
  core.load_model(centroid_model(16));

  // Hand case: windows [60, 70, 10, 80] against budget 50 -> 3/4 breach.
  REQUIRE(core.ingest_report(report(5, 0.0, 60, 55, 65)).ok());
  REQUIRE(core.ingest_report(report(5, 1.0, 70, 65, 75)).ok());
  REQUIRE(core.ingest_report(report(5, 2.0, 10, 5, 15)).ok());
  REQUIRE(core.ingest_report(report(5, 3.0, 80, 75, 85)).ok());
  REQUIRE(core.classify_session(Teid{5}).ok());

  auto decision = core.detect_degradation(Teid{5});
  REQUIRE(decision.ok());
  CHECK(decision.value().verdict == Verdict::kDegraded);
  CHECK(decision.value().breach_fraction == doctest::Approx(0.75));
  CHECK(decision.value().threshold == 0.5);
  CHECK(decision.value().budget_ms == 50.0);
  CHECK(decision.value().windows_considered == 4);
  CHECK(decision.value().issued_at == 3.0);
}

TEST_CASE("all windows under budget is healthy") {
  AnalyticsCore core(config_with(8, 4, 100.0, 0.5));
  core.load_model(centroid_model(16));
  for (int i = 0; i < 4; ++i) {
    REQUIRE(core.ingest_report(report(6, i, 20 + i, 10, 40)).ok());
  }
  REQUIRE(core.classify_session(Teid{6}).ok());
  auto decision = core.detect_degradation(Teid{6});
  REQUIRE(decision.ok());
  CHECK(decision.value().verdict == Verdict::kHealthy);
  CHECK(decision.value().breach_fraction == 0.0);
}

TEST_CASE("a window exactly at the budget is not a breach") {
  AnalyticsCore core(config_with(8, 4, 50.0, 0.25));
  core.load_model(centroid_model(16));
  for (int i = 0; i < 4; ++i) {
    REQUIRE(core.ingest_report(report(7, i, 50.0, 50.0, 50.0)).ok());
  }
  REQUIRE(core.classify_session(Teid{7}).ok());
  auto decision = core.detect_degradation(Teid{7});
  REQUIRE(decision.ok());
  CHECK(decision.value().verdict == Verdict::kHealthy);
  CHECK(decision.value().breach_fraction == 0.0);
}

TEST_CASE("detect_degradation needs a classification first") {
  AnalyticsCore core(config_with(8, 2));
  REQUIRE(core.ingest_report(report(8, 0.0, 10, 5, 20)).ok());
  REQUIRE(core.ingest_report(report(8, 1.0, 10, 5, 20)).ok());
  CHECK(core.detect_degradation(Teid{8}).code() == Errc::unclassified);
  CHECK(core.detect_degradation(Teid{404}).code() == Errc::unknown_teid);
}

TEST_CASE("decision and report JSON round-trip") {
  Decision decision;
  decision.teid = Teid{42};
  decision.verdict = Verdict::kDegraded;
  decision.game = "LOL";
  decision.confidence = 0.93;
  decision.breach_fraction = 0.75;
  decision.threshold = 0.5;
  decision.budget_ms = 100.0;
  decision.windows_considered = 8;
  decision.issued_at = 12.5;

  auto back = decision_from_json(decision_to_json(decision));
  REQUIRE(back.ok());
  CHECK(back.value().teid == decision.teid);
  CHECK(back.value().verdict == Verdict::kDegraded);
  CHECK(back.value().game == "LOL");
  CHECK(back.value().breach_fraction == 0.75);

  LatencyReport r = report(9, 3.0, 25, 20, 30, 12);
  r.features = std::vector<double>{1.0, 2.0};
  auto parsed = report_from_json(report_to_json(r));
  REQUIRE(parsed.ok());
  CHECK(parsed.value().teid == r.teid);
  CHECK(parsed.value().features == r.features);

  CHECK(report_from_json("{}").code() == Errc::malformed_report);
  CHECK(report_from_json("not json").code() == Errc::malformed_report);
}

TEST_CASE("notify_smf delivers to the stub and fails cleanly") {
  SmfStub stub("127.0.0.1", 0);
  REQUIRE(stub.start().ok());

  Decision decision;
  decision.teid = Teid{1};
  decision.verdict = Verdict::kDegraded;
  decision.game = "VAL";
  decision.issued_at = 1.0;

  auto delivered = notify_smf(decision, stub.url());
  REQUIRE(delivered.ok());
  CHECK(delivered.value() == 204);
  CHECK(stub.notification_count() == 1);
  auto body = decision_from_json(stub.notifications()[0]);
  REQUIRE(body.ok());
  CHECK(body.value().teid.value == 1);
  stub.stop();

  CHECK(notify_smf(decision, "http://127.0.0.1:1").code() ==
        Errc::endpoint_unreachable);
}

TEST_CASE("auto mode notifies once per cooldown window") {
  SmfStub stub("127.0.0.1", 0);
  REQUIRE(stub.start().ok());

  AnalyticsConfig config = config_with(4, 2, 50.0, 0.5);
  config.auto_decide = true;
  config.smf_url = stub.url();
  config.policy.cooldown_s = 10.0;
  AnalyticsCore core(config);
  core.load_model(centroid_model(16));

  // Every window over budget; windows arrive one second apart.
  for (int i = 0; i < 8; ++i) {
    REQUIRE(core.ingest_report(report(3, i, 200, 150, 250)).ok());
  }
  // First decision at window 1 (min_windows 2), next eligible at >= 11.
  CHECK(stub.notification_count() == 1);
  auto snap = core.session(Teid{3});
  REQUIRE(snap.ok());
  CHECK(snap.value().counters.notifications_sent == 1);
  CHECK(snap.value().counters.notifications_suppressed == 6);

  for (int i = 8; i < 14; ++i) {
    REQUIRE(core.ingest_report(report(3, i, 200, 150, 250)).ok());
  }
  CHECK(stub.notification_count() == 2);
  snap = core.session(Teid{3});
  CHECK(snap.value().counters.notifications_sent == 2);
  stub.stop();
}

TEST_CASE("unreachable SMF counts as failure, not delivery") {
  AnalyticsConfig config = config_with(4, 2, 50.0, 0.5);
  config.auto_decide = true;
  config.smf_url = "http://127.0.0.1:1";
  AnalyticsCore core(config);
  core.load_model(centroid_model(16));
  for (int i = 0; i < 3; ++i) {
    REQUIRE(core.ingest_report(report(4, i, 200, 150, 250)).ok());
  }
  auto snap = core.session(Teid{4});
  REQUIRE(snap.ok());
  CHECK(snap.value().counters.notifications_sent == 0);
  CHECK(snap.value().counters.notifications_failed >= 1);
}

TEST_CASE("replaying the same report log yields identical decisions") {
  const auto run = [](std::vector<Decision>& decisions) {
    AnalyticsCore core(config_with(6, 3, 80.0, 0.5));
    core.load_model(centroid_model(16));
    for (int i = 0; i < 10; ++i) {
      const double mean = i % 2 == 0 ? 120.0 : 40.0;
      REQUIRE(core.ingest_report(report(2, i, mean, mean - 5, mean + 5)).ok());
      if (core.classify_session(Teid{2}).ok()) {
        auto decision = core.detect_degradation(Teid{2});
        if (decision.ok()) decisions.push_back(decision.value());
      }
    }
  };
  std::vector<Decision> first, second;
  run(first);
  run(second);
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].verdict == second[i].verdict);
    CHECK(first[i].breach_fraction == second[i].breach_fraction);
    CHECK(first[i].game == second[i].game);
  }
}

TEST_CASE("HTTP surface: reports, sessions, classify, health") {
  auto core = std::make_shared<AnalyticsCore>(config_with(8, 2));
  core->load_model(centroid_model(16));
  AnalyticsServer server(core, "127.0.0.1", 0);
  REQUIRE(server.start().ok());

  httplib::Client client("127.0.0.1", server.port());
  client.set_connection_timeout(2, 0);

  auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["model_loaded"] == true);

  // Reports for TEID 42.
  for (int i = 0; i < 3; ++i) {
    LatencyReport r = report(42, i, 20 + i, 10, 60);
    auto posted = client.Post("/v1/reports", report_to_json(r), "application/json");
    REQUIRE(posted);
    CHECK(posted->status == 202);
  }

  auto bad = client.Post("/v1/reports", R"({"teid": 1})", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);

  auto found = client.Get("/v1/sessions/42");
  REQUIRE(found);
  CHECK(found->status == 200);
  const json session = json::parse(found->body);
  CHECK(session["report_count"] == 3);

  auto missing = client.Get("/v1/sessions/777");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  auto classified = client.Post("/v1/classify/42", "", "application/json");
  REQUIRE(classified);
  CHECK(classified->status == 200);
  CHECK(json::parse(classified->body).contains("game"));

  auto unknown = client.Post("/v1/classify/777", "", "application/json");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);

  // One report is below min_windows for a fresh TEID.
  LatencyReport single = report(55, 0.0, 10, 5, 20);
  REQUIRE(client.Post("/v1/reports", report_to_json(single), "application/json"));
  auto conflict = client.Post("/v1/classify/55", "", "application/json");
  REQUIRE(conflict);
  CHECK(conflict->status == 409);

  auto dump = client.Get("/v1/sessions");
  REQUIRE(dump);
  CHECK(dump->status == 200);
  CHECK(json::parse(dump->body)["sessions"].size() == 2);

  server.stop();
}

TEST_CASE("classify without a model maps to 503") {
  auto core = std::make_shared<AnalyticsCore>(config_with(8, 1));
  AnalyticsServer server(core, "127.0.0.1", 0);
  REQUIRE(server.start().ok());
  httplib::Client client("127.0.0.1", server.port());
  LatencyReport r = report(1, 0.0, 10, 5, 20);
  REQUIRE(client.Post("/v1/reports", report_to_json(r), "application/json"));
  auto response = client.Post("/v1/classify/1", "", "application/json");
  REQUIRE(response);
  CHECK(response->status == 503);
  server.stop();
}

TEST_CASE("service config parsing and env overrides") {
  const auto dir = std::filesystem::temp_directory_path() / "gtpulse_cfg";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "service.json").string();
  REQUIRE(write_file(path, R"({
    "listen": "127.0.0.1:9099",
    "model_path": "model.json",
    "smf_url": "http://127.0.0.1:9100",
    "ring_capacity": 16,
    "policy": {
      "default_budget_ms": 80,
      "budgets_ms": {"LOL": 60, "VAL": 120},
      "breach_fraction": 0.4,
      "min_windows": 3,
      "cooldown_s": 15
    }
  })")
              .ok());

  auto config = load_service_config(path);
  REQUIRE(config.ok());
  CHECK(config.value().listen_host == "127.0.0.1");
  CHECK(config.value().listen_port == 9099);
  CHECK(config.value().model_path == "model.json");
  CHECK(config.value().analytics.smf_url == "http://127.0.0.1:9100");
  CHECK(config.value().analytics.ring_capacity == 16);
  CHECK(config.value().analytics.policy.budget_for("LOL") == 60.0);
  CHECK(config.value().analytics.policy.budget_for("TFT") == 80.0);
  CHECK(config.value().analytics.policy.breach_fraction == 0.4);

  setenv("GTPULSE_LISTEN", "0.0.0.0:7001", 1);
  setenv("GTPULSE_DEFAULT_BUDGET_MS", "55", 1);
  auto overridden = load_service_config(path);
  unsetenv("GTPULSE_LISTEN");
  unsetenv("GTPULSE_DEFAULT_BUDGET_MS");
  REQUIRE(overridden.ok());
  CHECK(overridden.value().listen_host == "0.0.0.0");
  CHECK(overridden.value().listen_port == 7001);
  CHECK(overridden.value().analytics.policy.default_budget_ms == 55.0);

  REQUIRE(write_file(path, "{\"listen\": \"nope\"}").ok());
  CHECK(load_service_config(path).code() == Errc::bad_config);
  CHECK(load_service_config("/nonexistent/x.json").code() == Errc::io_error);
}

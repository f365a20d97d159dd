#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "gtpulse/analytics.hpp"
#include "gtpulse/io_util.hpp"
#include "gtpulse/traffic_sim.hpp"

using namespace gtpulse;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "gtpulse_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json read_json(const std::string& path) {
  auto content = read_file(path);
  REQUIRE(content.ok());
  return json::parse(content.value());
}

std::size_t line_count(const std::string& path) {
  auto content = read_file(path);
  REQUIRE(content.ok());
  std::size_t lines = 0;
  for (const char c : content.value()) {
    if (c == '\n') ++lines;
  }
  return lines;
}

}  // namespace

TEST_CASE("sim writes trace, ground truth, and manifest") {
  const auto dir = fresh_dir("sim_basic");
  cli::SimOptions options;
  options.out_dir = dir.string();
  options.duration_s = 2.0;
  options.rate_hz = 25.0;
  options.seed = 5;
  std::ostringstream log;
  REQUIRE(cli::run_sim(options, log) == 0);

  const auto trace = (dir / "trace.jsonl").string();
  const auto truth = (dir / "ground_truth.csv").string();
  const auto manifest = (dir / "manifest.json").string();
  REQUIRE(fs::exists(trace));
  REQUIRE(fs::exists(truth));
  REQUIRE(fs::exists(manifest));

  // 50 requests, zero loss: every request has a response record.
  CHECK(line_count(trace) == 100);

  const json m = read_json(manifest);
  CHECK(m["format_version"] == 1);
  CHECK(m["subcommand"] == "sim");
  CHECK(m["seeds"]["sim"] == 5);
  CHECK(m["outputs"].size() == 2);
  for (const auto& output : m["outputs"]) {
    CHECK(output.contains("fnv1a64"));
  }
}

TEST_CASE("sim is byte-identical across runs with one seed") {
  const auto dir_a = fresh_dir("sim_seed_a");
  const auto dir_b = fresh_dir("sim_seed_b");
  for (const auto& dir : {dir_a, dir_b}) {
    cli::SimOptions options;
    options.out_dir = dir.string();
    options.duration_s = 3.0;
    options.rate_hz = 40.0;
    options.jitter_ms = 5.0;
    options.loss_prob = 0.01;
    options.seed = 99;
    std::ostringstream log;
    REQUIRE(cli::run_sim(options, log) == 0);
  }
  CHECK(read_file((dir_a / "trace.jsonl").string()).value() ==
        read_file((dir_b / "trace.jsonl").string()).value());
  CHECK(read_file((dir_a / "ground_truth.csv").string()).value() ==
        read_file((dir_b / "ground_truth.csv").string()).value());
}

TEST_CASE("sim rejects an unwritable output directory") {
  cli::SimOptions options;
  options.out_dir = "/proc/gtpulse_nope";
  options.duration_s = 1.0;
  std::ostringstream log;
  CHECK(cli::run_sim(options, log) != 0);
}

TEST_CASE("sim honors a config file with flag overrides") {
  const auto dir = fresh_dir("sim_config");
  const auto config_path = (dir / "sim.json").string();
  REQUIRE(write_file(config_path, R"({
    "duration_s": 1.0,
    "request_rate_hz": 10,
    "teids": [42, 43],
    "jitter_ms": 0,
    "loss_prob": 0,
    "seed": 1,
    "profile": {"min_ms": 5, "max_ms": 50, "period_s": 10, "phase_rad": 0}
  })")
              .ok());

  cli::SimOptions options;
  options.config_path = config_path;
  options.out_dir = dir.string();
  options.rate_hz = 20.0;  // override the file's 10 Hz
  std::ostringstream log;
  REQUIRE(cli::run_sim(options, log) == 0);
  CHECK(line_count((dir / "trace.jsonl").string()) == 40);

  const json manifest = read_json((dir / "manifest.json").string());
  CHECK(manifest["config"]["request_rate_hz"] == 20.0);
  CHECK(manifest["config"]["teids"].size() == 2);
}

TEST_CASE("estimate on a noiseless trace reports a perfect fit") {
  const auto dir = fresh_dir("estimate_clean");
  cli::SimOptions sim;
  sim.out_dir = dir.string();
  sim.duration_s = 10.0;
  sim.rate_hz = 50.0;
  sim.seed = 7;
  std::ostringstream log;
  REQUIRE(cli::run_sim(sim, log) == 0);

  cli::EstimateOptions estimate;
  estimate.trace_path = (dir / "trace.jsonl").string();
  estimate.truth_path = (dir / "ground_truth.csv").string();
  estimate.out_dir = (dir / "est").string();
  REQUIRE(cli::run_estimate(estimate, log) == 0);

  const json report = read_json((dir / "est" / "regression.json").string());
  CHECK(report["format_version"] == 1);
  CHECK(std::abs(report["regression"]["r2_norm"].get<double>() - 1.0) <= 1e-9);
  CHECK(report["regression"]["mape_orig"].get<double>() <= 1e-9);
  CHECK(report["counts"]["samples_matched"] == 500);
  CHECK(report["counts"]["responses_lost"] == 0);
  CHECK(report["histogram"]["mode_bin_index"] == 0);
  CHECK(fs::exists(dir / "est" / "samples.csv"));
  CHECK(fs::exists(dir / "est" / "histogram.csv"));
  CHECK(fs::exists(dir / "est" / "manifest.json"));
}

TEST_CASE("estimate fails cleanly without ground truth") {
  const auto dir = fresh_dir("estimate_missing");
  cli::SimOptions sim;
  sim.out_dir = dir.string();
  sim.duration_s = 1.0;
  std::ostringstream log;
  REQUIRE(cli::run_sim(sim, log) == 0);

  cli::EstimateOptions estimate;
  estimate.trace_path = (dir / "trace.jsonl").string();
  estimate.truth_path = (dir / "missing.csv").string();
  estimate.out_dir = dir.string();
  CHECK(cli::run_estimate(estimate, log) != 0);
}

TEST_CASE("train on well-separated synthetic data") {
  const auto dir = fresh_dir("train_knn");
  cli::TrainOptions train;
  train.use_synth = true;
  train.synth_n = 1200;
  train.synth_d = 8;
  train.synth_separation = 10.0;
  train.synth_seed = 3;
  train.kind = "knn";
  train.knn_k = 3;
  train.runs = 3;
  train.out_dir = dir.string();
  std::ostringstream log;
  REQUIRE(cli::run_train(train, log) == 0);

  const json report = read_json((dir / "train_report.json").string());
  CHECK(report["averaged"]["accuracy"].get<double>() >= 0.99);
  CHECK(report["per_run"].size() == 3);
  CHECK(fs::exists(dir / "model.json"));
  CHECK(fs::exists(dir / "per_run_accuracy.csv"));
  for (const std::string game : {"LOL", "TFT", "VAL"}) {
    CHECK(fs::exists(dir / ("roc_" + game + ".csv")));
    CHECK(fs::exists(dir / ("pr_" + game + ".csv")));
  }
  // 3 data rows + comment + header.
  CHECK(line_count((dir / "per_run_accuracy.csv").string()) == 5);

  const json model = read_json((dir / "model.json").string());
  CHECK(model["format_version"] == 1);
  CHECK(model["kind"] == "knn");
}

TEST_CASE("train rejects an unknown kind") {
  cli::TrainOptions train;
  train.use_synth = true;
  train.kind = "perceptron";
  std::ostringstream log;
  CHECK(cli::run_train(train, log) != 0);
  CHECK(log.str().find("unknown model kind") != std::string::npos);
}

TEST_CASE("train requires a dataset source") {
  cli::TrainOptions train;
  std::ostringstream log;
  CHECK(cli::run_train(train, log) != 0);
}

TEST_CASE("loop: over-budget scenario notifies, under-budget stays quiet") {
  const auto dir = fresh_dir("loop");
  const auto over_path = (dir / "over.json").string();
  const auto under_path = (dir / "under.json").string();
  REQUIRE(write_file(over_path, R"({
    "name": "over_budget",
    "sim": {"duration_s": 20, "request_rate_hz": 30, "teids": [1001],
            "jitter_ms": 1, "loss_prob": 0, "seed": 11},
    "profile": {"min_ms": 150, "max_ms": 300, "period_s": 10},
    "window_ms": 1000,
    "service": {"policy": {"default_budget_ms": 100, "breach_fraction": 0.5,
                            "min_windows": 4, "cooldown_s": 30}},
    "expect": {"min_notifications": 1}
  })")
              .ok());
  REQUIRE(write_file(under_path, R"({
    "name": "under_budget",
    "sim": {"duration_s": 20, "request_rate_hz": 30, "teids": [1001],
            "jitter_ms": 1, "loss_prob": 0, "seed": 11},
    "profile": {"min_ms": 5, "max_ms": 20, "period_s": 10},
    "window_ms": 1000,
    "service": {"policy": {"default_budget_ms": 100, "breach_fraction": 0.5,
                            "min_windows": 4, "cooldown_s": 30}},
    "expect": {"min_notifications": 0, "max_notifications": 0}
  })")
              .ok());

  std::ostringstream log;
  cli::LoopOptions over;
  over.scenario_path = over_path;
  over.out_dir = (dir / "over_out").string();
  REQUIRE(cli::run_loop(over, log) == 0);
  const json over_summary = read_json((dir / "over_out" / "loop_summary.json").string());
  CHECK(over_summary["notifications"].get<std::size_t>() >= 1);
  CHECK(over_summary["as_expected"] == true);
  CHECK(fs::exists(dir / "over_out" / "notifications.jsonl"));

  cli::LoopOptions under;
  under.scenario_path = under_path;
  under.out_dir = (dir / "under_out").string();
  REQUIRE(cli::run_loop(under, log) == 0);
  const json under_summary =
      read_json((dir / "under_out" / "loop_summary.json").string());
  CHECK(under_summary["notifications"] == 0);
  CHECK(under_summary["as_expected"] == true);
}

TEST_CASE("loop fails when the service port is taken") {
  const auto dir = fresh_dir("loop_conflict");
  // Hold a port open, then point the scenario at it.
  SmfStub blocker("127.0.0.1", 0);
  REQUIRE(blocker.start().ok());
  const int taken = blocker.port();

  const auto path = (dir / "scenario.json").string();
  REQUIRE(write_file(path, std::string(R"({
    "name": "conflict",
    "sim": {"duration_s": 5, "request_rate_hz": 10, "seed": 1},
    "profile": {"min_ms": 5, "max_ms": 20, "period_s": 10},
    "service": {"listen": "127.0.0.1:)") +
                             std::to_string(taken) + R"("},
    "expect": {"min_notifications": 0}
  })")
              .ok());

  std::ostringstream log;
  cli::LoopOptions loop;
  loop.scenario_path = path;
  loop.out_dir = (dir / "out").string();
  CHECK(cli::run_loop(loop, log) != 0);
  blocker.stop();
}

TEST_CASE("the installed binary parses argv end to end") {
  const auto dir = fresh_dir("binary");
  const std::string binary = GTPULSE_BIN;

  std::string command = binary + " --version > " + (dir / "version.txt").string();
  REQUIRE(std::system(command.c_str()) == 0);

  command = binary + " sim --out " + (dir / "simout").string() +
            " --duration 1 --rate 10 --seed 3 > /dev/null";
  REQUIRE(std::system(command.c_str()) == 0);
  CHECK(fs::exists(dir / "simout" / "trace.jsonl"));

  command = binary + " train --bogus-flag 2> /dev/null";
  CHECK(std::system(command.c_str()) != 0);

  command = binary + " nonsense-subcommand 2> /dev/null";
  CHECK(std::system(command.c_str()) != 0);
}

#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gtpulse/result.hpp"

namespace gtpulse::cli {

// Flag values override the config file; unset optionals keep file/defaults.
struct SimOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<double> duration_s;
  std::optional<double> rate_hz;
  std::optional<double> jitter_ms;
  std::optional<double> loss_prob;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint32_t> teids;  // empty keeps file/defaults
  std::optional<double> profile_min_ms;
  std::optional<double> profile_max_ms;
  std::optional<double> profile_period_s;
  std::optional<double> profile_phase_rad;
};

struct EstimateOptions {
  std::string trace_path;
  std::string truth_path;
  std::string out_dir = ".";
  double match_timeout_ms = 2000.0;
  double histogram_bin_ms = 1.0;
};

struct TrainOptions {
  std::string dataset_path;
  std::string label_column = "game";
  bool use_synth = false;
  std::size_t synth_n = 10000;
  std::size_t synth_d = 16;
  std::size_t synth_classes = 3;
  double synth_separation = 4.0;
  std::uint64_t synth_seed = 1;

  std::string kind = "gradient_boost";
  std::uint64_t model_seed = 0;
  std::size_t knn_k = 5;
  std::size_t max_depth = 12;
  std::size_t min_leaf = 1;
  std::size_t n_trees = 25;
  double feature_subsample = 0.5;
  bool no_bootstrap = false;
  std::size_t n_rounds = 50;
  double learning_rate = 0.2;
  std::size_t boost_depth = 3;

  std::size_t runs = 10;
  double test_fraction = 0.2;
  std::uint64_t protocol_seed = 0;
  std::string out_dir = ".";
};

struct ServeOptions {
  std::string config_path;
};

struct LoopOptions {
  std::string scenario_path;
  std::string out_dir = ".";
};

struct SmfStubOptions {
  std::string listen = "127.0.0.1:9191";
  std::string log_path;
};

struct LoopSummary {
  std::string scenario_name;
  std::size_t notifications = 0;
  std::size_t expected_min = 0;
  long expected_max = -1;  // -1: unbounded
  bool as_expected = false;
};

int run_sim(const SimOptions& options, std::ostream& log);
int run_estimate(const EstimateOptions& options, std::ostream& log);
int run_train(const TrainOptions& options, std::ostream& log);
int run_serve(const ServeOptions& options, std::ostream& log,
              std::atomic<bool>* stop_flag = nullptr);
int run_loop(const LoopOptions& options, std::ostream& log);
int run_smf_stub(const SmfStubOptions& options, std::ostream& log,
                 std::atomic<bool>* stop_flag = nullptr);

// Library form of `loop` returning the observed counts (exit code maps to
// as_expected).
Result<LoopSummary> run_loop_scenario(const LoopOptions& options,
                                      std::ostream& log);

}  // namespace gtpulse::cli

#include <atomic>
#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "gtpulse/version.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Passive GTP-U latency observatory and analytics loop"};
  app.set_version_flag("--version", std::string(gtpulse::kVersion));
  app.require_subcommand(1);

  gtpulse::cli::SimOptions sim;
  auto* sim_cmd = app.add_subcommand(
      "sim", "Generate a GTP-U trace with a known latency profile");
  sim_cmd->add_option("--config", sim.config_path, "Sim config JSON file");
  sim_cmd->add_option("--out", sim.out_dir, "Output directory")->required();
  sim_cmd->add_option("--duration", sim.duration_s, "Duration in seconds");
  sim_cmd->add_option("--rate", sim.rate_hz, "Requests per second");
  sim_cmd->add_option("--jitter", sim.jitter_ms, "Gaussian jitter stddev (ms)");
  sim_cmd->add_option("--loss", sim.loss_prob, "Response loss probability");
  sim_cmd->add_option("--seed", sim.seed, "RNG seed");
  sim_cmd->add_option("--teid", sim.teids, "TEID (repeatable)");
  sim_cmd->add_option("--profile-min", sim.profile_min_ms, "Profile minimum (ms)");
  sim_cmd->add_option("--profile-max", sim.profile_max_ms, "Profile maximum (ms)");
  sim_cmd->add_option("--profile-period", sim.profile_period_s,
                      "Profile period (s)");
  sim_cmd->add_option("--profile-phase", sim.profile_phase_rad,
                      "Profile phase (rad)");

  gtpulse::cli::EstimateOptions estimate;
  auto* estimate_cmd = app.add_subcommand(
      "estimate", "Replay a trace through the tracker and score it");
  estimate_cmd->add_option("--trace", estimate.trace_path, "trace.jsonl path")
      ->required();
  estimate_cmd
      ->add_option("--ground-truth", estimate.truth_path, "ground_truth.csv path")
      ->required();
  estimate_cmd->add_option("--out", estimate.out_dir, "Output directory")
      ->required();
  estimate_cmd->add_option("--match-timeout", estimate.match_timeout_ms,
                           "Pending match timeout (ms)");
  estimate_cmd->add_option("--histogram-bin", estimate.histogram_bin_ms,
                           "Error histogram bin width (ms)");

  gtpulse::cli::TrainOptions train;
  auto* train_cmd =
      app.add_subcommand("train", "Train and evaluate a game classifier");
  train_cmd->add_option("--dataset", train.dataset_path, "Labeled CSV dataset");
  train_cmd->add_option("--label-column", train.label_column,
                        "Label column name (default: game)");
  train_cmd->add_flag("--synth", train.use_synth, "Use the synthetic dataset");
  train_cmd->add_option("--synth-n", train.synth_n, "Synthetic rows");
  train_cmd->add_option("--synth-d", train.synth_d, "Synthetic feature count");
  train_cmd->add_option("--synth-classes", train.synth_classes,
                        "Synthetic class count");
  train_cmd->add_option("--synth-separation", train.synth_separation,
                        "Synthetic centroid separation");
  train_cmd->add_option("--synth-seed", train.synth_seed, "Synthetic seed");
  train_cmd
      ->add_option("--kind", train.kind,
                   "knn | decision_tree | random_forest | gradient_boost")
      ->check(CLI::IsMember(
          {"knn", "dt", "decision_tree", "rf", "random_forest", "gb",
           "gradient_boost"}));
  train_cmd->add_option("--model-seed", train.model_seed, "Model RNG seed");
  train_cmd->add_option("--k", train.knn_k, "KNN neighbor count");
  train_cmd->add_option("--max-depth", train.max_depth, "Tree depth bound");
  train_cmd->add_option("--min-leaf", train.min_leaf, "Minimum rows per leaf");
  train_cmd->add_option("--trees", train.n_trees, "Forest size");
  train_cmd->add_option("--feature-subsample", train.feature_subsample,
                        "Forest per-split feature fraction");
  train_cmd->add_flag("--no-bootstrap", train.no_bootstrap,
                      "Train forest trees on the full training set");
  train_cmd->add_option("--rounds", train.n_rounds, "Boosting rounds");
  train_cmd->add_option("--learning-rate", train.learning_rate,
                        "Boosting learning rate");
  train_cmd->add_option("--boost-depth", train.boost_depth,
                        "Boosting tree depth");
  train_cmd->add_option("--runs", train.runs, "Evaluation repetitions");
  train_cmd->add_option("--test-fraction", train.test_fraction,
                        "Held-out fraction per run");
  train_cmd->add_option("--protocol-seed", train.protocol_seed,
                        "Base seed for split seeds");
  train_cmd->add_option("--out", train.out_dir, "Output directory")->required();

  gtpulse::cli::ServeOptions serve;
  auto* serve_cmd =
      app.add_subcommand("serve", "Run the analytics service until signalled");
  serve_cmd->add_option("--config", serve.config_path, "Service config JSON")
      ->required();

  gtpulse::cli::LoopOptions loop;
  auto* loop_cmd = app.add_subcommand(
      "loop", "End-to-end demo: sim -> tracker -> service -> SMF stub");
  loop_cmd->add_option("--scenario", loop.scenario_path, "Scenario JSON file")
      ->required();
  loop_cmd->add_option("--out", loop.out_dir, "Output directory")->required();

  gtpulse::cli::SmfStubOptions stub;
  auto* stub_cmd = app.add_subcommand(
      "smf-stub", "Run a standalone SMF notification sink");
  stub_cmd->add_option("--listen", stub.listen, "host:port (default 127.0.0.1:9191)");
  stub_cmd->add_option("--log", stub.log_path, "Append notifications to this file");

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  if (sim_cmd->parsed()) return gtpulse::cli::run_sim(sim, std::cout);
  if (estimate_cmd->parsed()) return gtpulse::cli::run_estimate(estimate, std::cout);
  if (train_cmd->parsed()) return gtpulse::cli::run_train(train, std::cout);
  if (serve_cmd->parsed()) return gtpulse::cli::run_serve(serve, std::cout, &g_stop);
  if (loop_cmd->parsed()) return gtpulse::cli::run_loop(loop, std::cout);
  if (stub_cmd->parsed()) return gtpulse::cli::run_smf_stub(stub, std::cout, &g_stop);
  return 1;
}

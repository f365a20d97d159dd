#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gtpulse/analytics.hpp"
#include "gtpulse/dataset.hpp"
#include "gtpulse/flow_tracker.hpp"
#include "gtpulse/io_util.hpp"
#include "gtpulse/metrics.hpp"
#include "gtpulse/models.hpp"
#include "gtpulse/traffic_sim.hpp"
#include "gtpulse/version.hpp"
#include "manifest.hpp"

namespace gtpulse::cli {

namespace {

using nlohmann::json;

namespace fs = std::filesystem;

class Stopwatch {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

int fail(std::ostream& log, const std::string& message) {
  log << "error: " << message << '\n';
  return 1;
}

int fail(std::ostream& log, const Error& error) {
  log << "error: " << errc_name(error.code) << ": " << error.message << '\n';
  return 1;
}

bool ensure_dir(const std::string& dir, std::ostream& log) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    log << "error: cannot create " << dir << ": " << ec.message() << '\n';
    return false;
  }
  // Probe writability; some failure modes only show up on open.
  const auto probe = (fs::path(dir) / ".gtpulse_probe").string();
  if (!write_file(probe, "").ok()) {
    log << "error: " << dir << " is not writable\n";
    return false;
  }
  fs::remove(probe, ec);
  return true;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

Result<json> read_json_file(const std::string& path) {
  auto content = read_file(path);
  if (!content.ok()) return content.error();
  json doc = json::parse(content.value(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    return make_error(Errc::bad_config, path + " is not a JSON object");
  }
  return doc;
}

json sim_config_to_json(const SimConfig& config, const SinusoidalProfile& profile) {
  json teids = json::array();
  for (const Teid teid : config.teids) teids.push_back(teid.value);
  return json{{"duration_s", config.duration_s},
              {"request_rate_hz", config.request_rate_hz},
              {"teids", std::move(teids)},
              {"jitter_ms", config.jitter_ms},
              {"loss_prob", config.loss_prob},
              {"seed", config.seed},
              {"profile",
               {{"min_ms", profile.min_ms},
                {"max_ms", profile.max_ms},
                {"period_s", profile.period_s},
                {"phase_rad", profile.phase_rad}}}};
}

Status sim_config_from_json(const json& doc, SimConfig& config,
                            SinusoidalProfile& profile) {
  try {
    config.duration_s = doc.value("duration_s", config.duration_s);
    config.request_rate_hz = doc.value("request_rate_hz", config.request_rate_hz);
    config.jitter_ms = doc.value("jitter_ms", config.jitter_ms);
    config.loss_prob = doc.value("loss_prob", config.loss_prob);
    config.seed = doc.value("seed", config.seed);
    if (doc.contains("teids")) {
      config.teids.clear();
      for (const auto& teid : doc.at("teids")) {
        config.teids.push_back(Teid{teid.get<std::uint32_t>()});
      }
    }
    if (doc.contains("profile")) {
      const json& p = doc.at("profile");
      profile.min_ms = p.value("min_ms", profile.min_ms);
      profile.max_ms = p.value("max_ms", profile.max_ms);
      profile.period_s = p.value("period_s", profile.period_s);
      profile.phase_rad = p.value("phase_rad", profile.phase_rad);
    }
  } catch (const json::exception& e) {
    return make_error(Errc::bad_config, std::string("sim config: ") + e.what());
  }
  return {};
}

Status validate_sim(const SimConfig& config, const SinusoidalProfile& profile) {
  if (config.duration_s <= 0.0) {
    return make_error(Errc::bad_config, "duration_s must be > 0");
  }
  if (config.request_rate_hz <= 0.0) {
    return make_error(Errc::bad_config, "request_rate_hz must be > 0");
  }
  if (config.loss_prob < 0.0 || config.loss_prob >= 1.0) {
    return make_error(Errc::bad_config, "loss_prob must be in [0, 1)");
  }
  if (config.jitter_ms < 0.0) {
    return make_error(Errc::bad_config, "jitter_ms must be >= 0");
  }
  if (config.teids.empty()) {
    return make_error(Errc::bad_config, "need at least one TEID");
  }
  if (!(profile.max_ms > profile.min_ms) || profile.min_ms <= 0.0) {
    return make_error(Errc::bad_config, "profile needs max_ms > min_ms > 0");
  }
  if (profile.period_s <= 0.0) {
    return make_error(Errc::bad_config, "profile period_s must be > 0");
  }
  return {};
}

std::string sanitize_name(const std::string& name) {
  std::string out;
  for (const char c : name) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  }
  return out.empty() ? "class" : out;
}

// Windows per TEID in completed_at order.
std::map<std::uint32_t, LatencySeries> windows_by_teid(
    const std::vector<LatencySample>& samples, double window_ms) {
  std::map<std::uint32_t, std::vector<LatencySample>> grouped;
  for (const LatencySample& sample : samples) {
    grouped[sample.teid.value].push_back(sample);
  }
  std::map<std::uint32_t, LatencySeries> out;
  for (auto& [teid, group] : grouped) {
    std::sort(group.begin(), group.end(),
              [](const LatencySample& a, const LatencySample& b) {
                return a.completed_at < b.completed_at;
              });
    out.emplace(teid, window_aggregate(group, window_ms));
  }
  return out;
}

LatencyReport window_to_report(std::uint32_t teid, double window_ms,
                               std::int64_t index, const WindowStats& w) {
  LatencyReport report;
  report.teid = Teid{teid};
  report.window_start = static_cast<double>(index) * window_ms / 1000.0;
  report.mean_ms = w.mean_ms;
  report.min_ms = w.min_ms;
  report.max_ms = w.max_ms;
  report.sample_count = w.count;
  return report;
}

}  // namespace

int run_sim(const SimOptions& options, std::ostream& log) {
  Stopwatch timer;
  SimConfig config;
  SinusoidalProfile profile;

  if (!options.config_path.empty()) {
    auto doc = read_json_file(options.config_path);
    if (!doc.ok()) return fail(log, doc.error());
    if (auto status = sim_config_from_json(doc.value(), config, profile);
        !status.ok()) {
      return fail(log, status.error());
    }
  }
  if (options.duration_s) config.duration_s = *options.duration_s;
  if (options.rate_hz) config.request_rate_hz = *options.rate_hz;
  if (options.jitter_ms) config.jitter_ms = *options.jitter_ms;
  if (options.loss_prob) config.loss_prob = *options.loss_prob;
  if (options.seed) config.seed = *options.seed;
  if (!options.teids.empty()) {
    config.teids.clear();
    for (const std::uint32_t teid : options.teids) {
      config.teids.push_back(Teid{teid});
    }
  }
  if (options.profile_min_ms) profile.min_ms = *options.profile_min_ms;
  if (options.profile_max_ms) profile.max_ms = *options.profile_max_ms;
  if (options.profile_period_s) profile.period_s = *options.profile_period_s;
  if (options.profile_phase_rad) profile.phase_rad = *options.profile_phase_rad;

  if (auto status = validate_sim(config, profile); !status.ok()) {
    return fail(log, status.error());
  }
  if (!ensure_dir(options.out_dir, log)) return 1;

  const SimOutput out = generate_trace(config, profile);

  const std::string trace_path = join_path(options.out_dir, "trace.jsonl");
  const std::string truth_path = join_path(options.out_dir, "ground_truth.csv");
  if (auto status = write_trace_file(out.records, trace_path); !status.ok()) {
    return fail(log, status.error());
  }
  if (auto status = write_ground_truth_file(out.truth, truth_path); !status.ok()) {
    return fail(log, status.error());
  }

  RunManifest manifest("sim");
  manifest.set_config(sim_config_to_json(config, profile));
  manifest.add_seed("sim", config.seed);
  if (!options.config_path.empty()) manifest.add_input(options.config_path);
  manifest.add_output(trace_path);
  manifest.add_output(truth_path);
  manifest.set_wall_ms(timer.elapsed_ms());
  if (auto status = manifest.write(options.out_dir); !status.ok()) {
    return fail(log, status.error());
  }

  log << "sim: " << out.records.size() << " records for "
      << out.truth.entries.size() << " requests -> " << trace_path << '\n';
  return 0;
}

int run_estimate(const EstimateOptions& options, std::ostream& log) {
  Stopwatch timer;
  if (options.match_timeout_ms <= 0.0) {
    return fail(log, "--match-timeout must be > 0");
  }
  if (options.histogram_bin_ms <= 0.0) {
    return fail(log, "--histogram-bin must be > 0");
  }
  auto records = read_trace_file(options.trace_path);
  if (!records.ok()) return fail(log, records.error());
  auto truth = read_ground_truth_file(options.truth_path);
  if (!truth.ok()) return fail(log, truth.error());
  if (!ensure_dir(options.out_dir, log)) return 1;

  TrackerConfig tracker_config;
  tracker_config.match_timeout_ms = options.match_timeout_ms;
  const EstimationRun run = run_estimation(records.value(), tracker_config);

  std::map<std::uint64_t, const GroundTruthEntry*> truth_by_corr;
  for (const GroundTruthEntry& entry : truth.value().entries) {
    truth_by_corr[entry.correlation_id] = &entry;
  }

  std::vector<double> truth_series;
  std::vector<double> estimate_series;
  std::size_t unmatched_truth = 0;
  std::ostringstream samples_csv;
  samples_csv << "# format_version=" << kReportFormatVersion << '\n';
  samples_csv << "corr,teid,completed_at,request_leg_ms,response_leg_ms,"
                 "total_ms,truth_ms,error_ms\n";
  for (const LatencySample& sample : run.samples) {
    const auto it = truth_by_corr.find(sample.correlation_id);
    const GroundTruthEntry* entry = it == truth_by_corr.end() ? nullptr : it->second;
    samples_csv << sample.correlation_id << ',' << sample.teid.value << ','
                << format_double(sample.completed_at) << ','
                << format_double(sample.request_leg_ms) << ','
                << format_double(sample.response_leg_ms) << ','
                << format_double(sample.total_ms) << ',';
    if (entry != nullptr && !entry->lost) {
      truth_series.push_back(entry->injected_total_ms);
      estimate_series.push_back(sample.total_ms);
      samples_csv << format_double(entry->injected_total_ms) << ','
                  << format_double(sample.total_ms - entry->injected_total_ms);
    } else {
      ++unmatched_truth;
      samples_csv << ',';
    }
    samples_csv << '\n';
  }

  if (truth_series.empty()) {
    return fail(log, "no matched samples with ground truth; nothing to score");
  }
  auto report = regression_report(truth_series, estimate_series);
  if (!report.ok()) return fail(log, report.error());

  // Error histogram over bins centered on zero.
  const double bin = options.histogram_bin_ms;
  std::map<long, std::size_t> histogram;
  for (std::size_t i = 0; i < truth_series.size(); ++i) {
    const double error = estimate_series[i] - truth_series[i];
    histogram[static_cast<long>(std::floor((error + bin / 2.0) / bin))]++;
  }
  long mode_bin = 0;
  std::size_t mode_count = 0;
  std::ostringstream histogram_csv;
  histogram_csv << "# format_version=" << kReportFormatVersion << '\n';
  histogram_csv << "bin_start_ms,bin_end_ms,count\n";
  for (const auto& [index, count] : histogram) {
    histogram_csv << format_double(index * bin - bin / 2.0) << ','
                  << format_double(index * bin + bin / 2.0) << ',' << count << '\n';
    if (count > mode_count) {
      mode_count = count;
      mode_bin = index;
    }
  }

  std::size_t lost = 0;
  for (const GroundTruthEntry& entry : truth.value().entries) {
    if (entry.lost) ++lost;
  }

  json doc;
  doc["format_version"] = kReportFormatVersion;
  doc["regression"] = {{"mse_norm", report.value().mse_norm},
                       {"mae_norm", report.value().mae_norm},
                       {"mape_norm", report.value().mape_norm},
                       {"r2_norm", report.value().r2_norm},
                       {"mape_orig", report.value().mape_orig},
                       {"mape_norm_excluded", report.value().mape_norm_excluded},
                       {"mape_orig_excluded", report.value().mape_orig_excluded},
                       {"scored_samples", report.value().sample_count}};
  doc["counts"] = {{"trace_records", records.value().size()},
                   {"requests", truth.value().entries.size()},
                   {"responses_lost", lost},
                   {"samples_matched", run.samples.size()},
                   {"samples_without_truth", unmatched_truth},
                   {"expired", run.expired.size()},
                   {"orphans", run.stats.orphan_observations},
                   {"replay_failed", run.replay_failed}};
  doc["histogram"] = {{"bin_ms", bin},
                      {"mode_bin_index", mode_bin},
                      {"mode_bin_count", mode_count}};

  const std::string samples_path = join_path(options.out_dir, "samples.csv");
  const std::string histogram_path = join_path(options.out_dir, "histogram.csv");
  const std::string report_path = join_path(options.out_dir, "regression.json");
  if (auto status = write_file(samples_path, samples_csv.str()); !status.ok()) {
    return fail(log, status.error());
  }
  if (auto status = write_file(histogram_path, histogram_csv.str()); !status.ok()) {
    return fail(log, status.error());
  }
  if (auto status = write_file(report_path, doc.dump(2) + "\n"); !status.ok()) {
    return fail(log, status.error());
  }

  RunManifest manifest("estimate");
  manifest.set_config(json{{"trace", options.trace_path},
                           {"ground_truth", options.truth_path},
                           {"match_timeout_ms", options.match_timeout_ms},
                           {"histogram_bin_ms", options.histogram_bin_ms}});
  manifest.add_input(options.trace_path);
  manifest.add_input(options.truth_path);
  manifest.add_output(samples_path);
  manifest.add_output(histogram_path);
  manifest.add_output(report_path);
  manifest.set_wall_ms(timer.elapsed_ms());
  if (auto status = manifest.write(options.out_dir); !status.ok()) {
    return fail(log, status.error());
  }

  log << "estimate: r2_norm=" << format_double(report.value().r2_norm)
      << " mape_orig=" << format_double(report.value().mape_orig) << "% over "
      << report.value().sample_count << " samples -> " << report_path << '\n';
  return 0;
}

namespace {

Result<ModelSpec> spec_from_options(const TrainOptions& options) {
  auto kind = model_kind_from_name(options.kind);
  if (!kind.ok()) return kind.error();
  ModelSpec spec;
  spec.seed = options.model_seed;
  switch (kind.value()) {
    case ModelKind::kKnn:
      spec.params = KnnParams{options.knn_k};
      break;
    case ModelKind::kDecisionTree:
      spec.params = TreeParams{options.max_depth, options.min_leaf};
      break;
    case ModelKind::kRandomForest:
      spec.params =
          ForestParams{options.n_trees, options.feature_subsample,
                       !options.no_bootstrap,
                       TreeParams{options.max_depth, options.min_leaf}};
      break;
    case ModelKind::kGradientBoost:
      spec.params = BoostParams{options.n_rounds, options.learning_rate,
                                options.boost_depth, options.min_leaf};
      break;
  }
  if (auto valid = validate_spec(spec); !valid.ok()) return valid.error();
  return spec;
}

json classifier_report_to_json(const ClassifierReport& report) {
  return json{{"accuracy", report.accuracy},
              {"precision_weighted", report.precision},
              {"recall_weighted", report.recall},
              {"f1_weighted", report.f1},
              {"precision_macro", report.precision_macro},
              {"recall_macro", report.recall_macro},
              {"f1_macro", report.f1_macro}};
}

}  // namespace

int run_train(const TrainOptions& options, std::ostream& log) {
  Stopwatch timer;
  auto spec = spec_from_options(options);
  if (!spec.ok()) return fail(log, spec.error());
  if (options.runs < 1) return fail(log, "--runs must be >= 1");
  if (options.test_fraction <= 0.0 || options.test_fraction >= 1.0) {
    return fail(log, "--test-fraction must be inside (0, 1)");
  }

  Dataset dataset;
  if (options.use_synth) {
    if (options.synth_classes < 1 || options.synth_n < options.synth_classes ||
        options.synth_d < 1 || options.synth_separation < 0.0) {
      return fail(log, "synthetic dataset needs n >= classes >= 1, d >= 1, "
                       "separation >= 0");
    }
    dataset = synth_dataset(options.synth_n, options.synth_d,
                            options.synth_classes, options.synth_separation,
                            options.synth_seed);
  } else {
    if (options.dataset_path.empty()) {
      return fail(log, "either --dataset or --synth is required");
    }
    auto loaded = load_dataset(options.dataset_path, options.label_column);
    if (!loaded.ok()) return fail(log, loaded.error());
    dataset = std::move(loaded).value();
    if (dataset.rows_dropped > 0) {
      log << "train: dropped " << dataset.rows_dropped << " malformed rows\n";
    }
  }
  if (!ensure_dir(options.out_dir, log)) return 1;

  EvalProtocol protocol;
  protocol.runs = options.runs;
  protocol.test_fraction = options.test_fraction;
  protocol.base_seed = options.protocol_seed;

  auto outcome = evaluate(spec.value(), dataset, protocol);
  if (!outcome.ok()) return fail(log, outcome.error());

  // Per-run metrics (box-plot data for run-to-run stability).
  std::ostringstream runs_csv;
  runs_csv << "# format_version=" << kReportFormatVersion << '\n';
  runs_csv << "run,accuracy,precision_weighted,recall_weighted,f1_weighted,"
              "precision_macro,recall_macro,f1_macro\n";
  for (std::size_t i = 0; i < outcome.value().per_run.size(); ++i) {
    const ClassifierReport& r = outcome.value().per_run[i];
    runs_csv << i << ',' << format_double(r.accuracy) << ','
             << format_double(r.precision) << ',' << format_double(r.recall)
             << ',' << format_double(r.f1) << ','
             << format_double(r.precision_macro) << ','
             << format_double(r.recall_macro) << ','
             << format_double(r.f1_macro) << '\n';
  }

  // Curve data from the first protocol split.
  const SplitIndices split =
      stratified_split(dataset, protocol.test_fraction, protocol.base_seed);
  const Dataset train_side = subset(dataset, split.train);
  const Dataset test_side = subset(dataset, split.test);
  auto curve_model = fit(spec.value(), train_side);
  if (!curve_model.ok()) return fail(log, curve_model.error());
  auto scores = predict_proba(curve_model.value(), test_side.features);
  if (!scores.ok()) return fail(log, scores.error());

  std::vector<std::string> output_paths;
  json curve_summary = json::object();
  for (std::size_t c = 0; c < dataset.class_names.size(); ++c) {
    const std::string& name = dataset.class_names[c];
    auto roc = roc_curve(test_side.labels, scores.value(), static_cast<int>(c));
    auto pr = precision_recall_curve(test_side.labels, scores.value(),
                                     static_cast<int>(c));
    if (!roc.ok()) return fail(log, roc.error());
    if (!pr.ok()) return fail(log, pr.error());
    const std::string roc_path =
        join_path(options.out_dir, "roc_" + sanitize_name(name) + ".csv");
    const std::string pr_path =
        join_path(options.out_dir, "pr_" + sanitize_name(name) + ".csv");
    if (auto status = write_curve_csv(roc.value(), roc_path); !status.ok()) {
      return fail(log, status.error());
    }
    if (auto status = write_curve_csv(pr.value(), pr_path); !status.ok()) {
      return fail(log, status.error());
    }
    output_paths.push_back(roc_path);
    output_paths.push_back(pr_path);
    curve_summary[name] = {{"roc_auc", roc.value().auc},
                           {"pr_auc", pr.value().auc}};
  }

  // Final model trained on the full dataset; this is what `serve` loads.
  auto final_model = fit(spec.value(), dataset);
  if (!final_model.ok()) return fail(log, final_model.error());
  const std::string model_path = join_path(options.out_dir, "model.json");
  if (auto status = save_model(final_model.value(), model_path); !status.ok()) {
    return fail(log, status.error());
  }

  json report_doc;
  report_doc["format_version"] = kReportFormatVersion;
  report_doc["kind"] = std::string(model_kind_name(spec.value().kind()));
  report_doc["runs"] = options.runs;
  report_doc["averaged"] = classifier_report_to_json(outcome.value().mean);
  json per_run = json::array();
  for (const ClassifierReport& r : outcome.value().per_run) {
    per_run.push_back(classifier_report_to_json(r));
  }
  report_doc["per_run"] = std::move(per_run);
  report_doc["curves_first_run"] = std::move(curve_summary);
  json class_counts = json::object();
  const auto counts = dataset.class_counts();
  for (std::size_t c = 0; c < dataset.class_names.size(); ++c) {
    class_counts[dataset.class_names[c]] = counts[c];
  }
  report_doc["class_counts"] = std::move(class_counts);
  if (!dataset.categorical_codes.empty()) {
    json codes = json::object();
    for (const auto& [column, mapping] : dataset.categorical_codes) {
      codes[column] = mapping;
    }
    report_doc["categorical_codes"] = std::move(codes);
  }
  if (dataset.rows_dropped > 0) {
    report_doc["rows_dropped"] = dataset.rows_dropped;
  }

  const std::string runs_path = join_path(options.out_dir, "per_run_accuracy.csv");
  const std::string report_path = join_path(options.out_dir, "train_report.json");
  if (auto status = write_file(runs_path, runs_csv.str()); !status.ok()) {
    return fail(log, status.error());
  }
  if (auto status = write_file(report_path, report_doc.dump(2) + "\n");
      !status.ok()) {
    return fail(log, status.error());
  }

  RunManifest manifest("train");
  json config{{"kind", options.kind},
              {"runs", options.runs},
              {"test_fraction", options.test_fraction}};
  if (options.use_synth) {
    config["synth"] = {{"n", options.synth_n},
                       {"d", options.synth_d},
                       {"classes", options.synth_classes},
                       {"separation", options.synth_separation},
                       {"seed", options.synth_seed}};
  } else {
    config["dataset"] = options.dataset_path;
    manifest.add_input(options.dataset_path);
  }
  manifest.set_config(std::move(config));
  manifest.add_seed("protocol", options.protocol_seed);
  manifest.add_seed("model", options.model_seed);
  if (options.use_synth) manifest.add_seed("synth", options.synth_seed);
  manifest.add_output(model_path);
  manifest.add_output(runs_path);
  manifest.add_output(report_path);
  for (const std::string& path : output_paths) manifest.add_output(path);
  manifest.set_wall_ms(timer.elapsed_ms());
  if (auto status = manifest.write(options.out_dir); !status.ok()) {
    return fail(log, status.error());
  }

  log << "train: " << model_kind_name(spec.value().kind())
      << " mean accuracy=" << format_double(outcome.value().mean.accuracy)
      << " over " << options.runs << " runs -> " << model_path << '\n';
  return 0;
}

int run_serve(const ServeOptions& options, std::ostream& log,
              std::atomic<bool>* stop_flag) {
  auto config = load_service_config(options.config_path);
  if (!config.ok()) return fail(log, config.error());

  auto core = std::make_shared<AnalyticsCore>(config.value().analytics);
  if (!config.value().model_path.empty()) {
    auto model = load_model(config.value().model_path);
    if (!model.ok()) return fail(log, model.error());
    core->load_model(std::move(model).value());
  }

  AnalyticsServer server(core, config.value().listen_host,
                         config.value().listen_port);
  if (auto status = server.start(); !status.ok()) return fail(log, status.error());
  log << "serve: listening on " << config.value().listen_host << ':'
      << server.port() << " (model "
      << (core->has_model() ? "loaded" : "not loaded") << ")\n";

  while (stop_flag == nullptr || !stop_flag->load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  server.stop();
  return 0;
}

namespace {

struct LoopScenario {
  std::string name = "scenario";
  SimConfig sim;
  SinusoidalProfile profile;
  double window_ms = 1000.0;
  ServiceConfig service;  // listen defaults to an ephemeral port
  std::map<std::string, SinusoidalProfile> train_profiles;
  std::size_t train_knn_k = 3;
  std::size_t expected_min = 0;
  long expected_max = -1;
};

SinusoidalProfile profile_from_json(const json& doc, SinusoidalProfile base) {
  base.min_ms = doc.value("min_ms", base.min_ms);
  base.max_ms = doc.value("max_ms", base.max_ms);
  base.period_s = doc.value("period_s", base.period_s);
  base.phase_rad = doc.value("phase_rad", base.phase_rad);
  return base;
}

Result<LoopScenario> load_scenario(const std::string& path) {
  auto doc = read_json_file(path);
  if (!doc.ok()) return doc.error();
  LoopScenario scenario;
  scenario.service.listen_host = "127.0.0.1";
  scenario.service.listen_port = 0;
  // Loop traces are short; decide as soon as the ring fills a little.
  scenario.service.analytics.policy.min_windows = 4;
  scenario.service.analytics.policy.cooldown_s = 30.0;
  scenario.sim.duration_s = 60.0;
  scenario.sim.request_rate_hz = 30.0;

  try {
    const json& j = doc.value();
    scenario.name = j.value("name", scenario.name);
    if (j.contains("sim")) {
      SimConfig config = scenario.sim;
      SinusoidalProfile unused;
      if (auto status = sim_config_from_json(j.at("sim"), config, unused);
          !status.ok()) {
        return status.error();
      }
      scenario.sim = config;
    }
    if (j.contains("profile")) {
      scenario.profile = profile_from_json(j.at("profile"), SinusoidalProfile{});
    }
    scenario.window_ms = j.value("window_ms", scenario.window_ms);
    if (scenario.window_ms <= 0.0) {
      return make_error(Errc::bad_config, "window_ms must be > 0");
    }
    if (j.contains("service")) {
      auto service = service_config_from_json(j.at("service").dump());
      if (!service.ok()) return service.error();
      scenario.service = service.value();
      if (!j.at("service").contains("listen")) {
        scenario.service.listen_host = "127.0.0.1";
        scenario.service.listen_port = 0;
      }
    }
    scenario.service.analytics.auto_decide = true;
    if (j.contains("train")) {
      scenario.train_knn_k = j.at("train").value("k", scenario.train_knn_k);
      if (j.at("train").contains("profiles")) {
        for (const auto& [game, p] : j.at("train").at("profiles").items()) {
          scenario.train_profiles[game] =
              profile_from_json(p, SinusoidalProfile{});
        }
      }
    }
    if (j.contains("expect")) {
      scenario.expected_min =
          j.at("expect").value("min_notifications", std::size_t{0});
      scenario.expected_max = j.at("expect").value("max_notifications", -1L);
    }
  } catch (const json::exception& e) {
    return make_error(Errc::bad_config, std::string("scenario: ") + e.what());
  }

  if (scenario.train_profiles.empty()) {
    // Demo calibration: three latency bands standing in for game classes.
    SinusoidalProfile lol;
    lol.min_ms = 20.0;
    lol.max_ms = 80.0;
    lol.period_s = 10.0;
    SinusoidalProfile tft;
    tft.min_ms = 5.0;
    tft.max_ms = 30.0;
    tft.period_s = 13.0;
    SinusoidalProfile val;
    val.min_ms = 120.0;
    val.max_ms = 260.0;
    val.period_s = 17.0;
    scenario.train_profiles = {{"LOL", lol}, {"TFT", tft}, {"VAL", val}};
  }
  return scenario;
}

// Builds training rows in the derived-feature space: simulate each class's
// latency band, aggregate windows, then slide a ring-sized group over them.
Result<TrainedModel> train_loop_model(const LoopScenario& scenario,
                                      std::size_t feature_dim) {
  Dataset dataset;
  std::vector<double> rows;
  const std::size_t ring = scenario.service.analytics.ring_capacity;
  int label = 0;
  for (const auto& [game, profile] : scenario.train_profiles) {
    dataset.class_names.push_back(game);
    SimConfig config;
    config.duration_s = 60.0;
    config.request_rate_hz = 20.0;
    config.teids = {Teid{9000u + static_cast<std::uint32_t>(label)}};
    config.jitter_ms = 1.0;
    config.seed = scenario.sim.seed + static_cast<std::uint64_t>(label) + 1;
    const SimOutput out = generate_trace(config, profile);
    const EstimationRun run = run_estimation(out.records);
    const auto by_teid = windows_by_teid(run.samples, scenario.window_ms);

    for (const auto& [teid, series] : by_teid) {
      std::deque<LatencyReport> window_ring;
      for (const auto& [index, stats] : series.windows) {
        window_ring.push_back(
            window_to_report(teid, scenario.window_ms, index, stats));
        if (window_ring.size() > ring) window_ring.pop_front();
        if (window_ring.size() <
            scenario.service.analytics.policy.min_windows) {
          continue;
        }
        const auto features = derive_latency_features(window_ring, feature_dim);
        rows.insert(rows.end(), features.begin(), features.end());
        dataset.labels.push_back(label);
      }
    }
    ++label;
  }
  if (dataset.labels.empty()) {
    return make_error(Errc::degenerate_data, "no training windows produced");
  }
  dataset.features.rows = dataset.labels.size();
  dataset.features.cols = feature_dim;
  dataset.features.data = std::move(rows);
  for (std::size_t i = 0; i < feature_dim; ++i) {
    dataset.feature_names.push_back("latstat" + std::to_string(i));
  }

  ModelSpec spec;
  spec.params = KnnParams{scenario.train_knn_k};
  return fit(spec, dataset);
}

}  // namespace

Result<LoopSummary> run_loop_scenario(const LoopOptions& options,
                                      std::ostream& log) {
  auto scenario = load_scenario(options.scenario_path);
  if (!scenario.ok()) return scenario.error();
  const LoopScenario& sc = scenario.value();

  const std::string stub_log =
      options.out_dir.empty() ? std::string{}
                              : join_path(options.out_dir, "notifications.jsonl");
  if (!stub_log.empty()) {
    std::error_code ec;
    fs::remove(stub_log, ec);
  }
  SmfStub stub("127.0.0.1", 0, stub_log);
  if (auto status = stub.start(); !status.ok()) return status.error();

  constexpr std::size_t kFeatureDim = 16;
  auto model = train_loop_model(sc, kFeatureDim);
  if (!model.ok()) return model.error();

  AnalyticsConfig analytics = sc.service.analytics;
  analytics.smf_url = stub.url();
  auto core = std::make_shared<AnalyticsCore>(analytics);
  core->load_model(std::move(model).value());
  AnalyticsServer server(core, sc.service.listen_host, sc.service.listen_port);
  if (auto status = server.start(); !status.ok()) return status.error();
  log << "loop: service on port " << server.port() << ", SMF stub on port "
      << stub.port() << '\n';

  // Measurement pass: simulate, estimate, window, report over HTTP.
  const SimOutput out = generate_trace(sc.sim, sc.profile);
  const EstimationRun run = run_estimation(out.records);
  const auto by_teid = windows_by_teid(run.samples, sc.window_ms);

  httplib::Client client(sc.service.listen_host, server.port());
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(10, 0);
  std::size_t reports_sent = 0;
  for (const auto& [teid, series] : by_teid) {
    for (const auto& [index, stats] : series.windows) {
      const LatencyReport report =
          window_to_report(teid, sc.window_ms, index, stats);
      const auto response =
          client.Post("/v1/reports", report_to_json(report), "application/json");
      if (!response || response->status != 202) {
        server.stop();
        stub.stop();
        return make_error(Errc::io_error, "report delivery failed");
      }
      ++reports_sent;
    }
  }

  server.stop();
  stub.stop();

  LoopSummary summary;
  summary.scenario_name = sc.name;
  summary.notifications = stub.notification_count();
  summary.expected_min = sc.expected_min;
  summary.expected_max = sc.expected_max;
  summary.as_expected =
      summary.notifications >= sc.expected_min &&
      (sc.expected_max < 0 ||
       summary.notifications <= static_cast<std::size_t>(sc.expected_max));

  if (!options.out_dir.empty()) {
    json doc;
    doc["format_version"] = kReportFormatVersion;
    doc["scenario"] = sc.name;
    doc["reports_sent"] = reports_sent;
    doc["notifications"] = summary.notifications;
    doc["expected_min"] = summary.expected_min;
    doc["expected_max"] = summary.expected_max;
    doc["as_expected"] = summary.as_expected;
    const std::string summary_path = join_path(options.out_dir, "loop_summary.json");
    if (auto status = write_file(summary_path, doc.dump(2) + "\n"); !status.ok()) {
      return status.error();
    }

    RunManifest manifest("loop");
    manifest.set_config(json{{"scenario", options.scenario_path}});
    manifest.add_seed("sim", sc.sim.seed);
    manifest.add_input(options.scenario_path);
    manifest.add_output(summary_path);
    if (!stub_log.empty() && fs::exists(stub_log)) {
      manifest.add_output(stub_log);
    }
    if (auto status = manifest.write(options.out_dir); !status.ok()) {
      return status.error();
    }
  }
  return summary;
}

int run_loop(const LoopOptions& options, std::ostream& log) {
  if (!options.out_dir.empty() && !ensure_dir(options.out_dir, log)) return 1;
  auto summary = run_loop_scenario(options, log);
  if (!summary.ok()) return fail(log, summary.error());
  log << "loop: scenario '" << summary.value().scenario_name << "' produced "
      << summary.value().notifications << " notifications (expected >= "
      << summary.value().expected_min << ")\n";
  if (!summary.value().as_expected) {
    log << "loop: notification count outside the expected band\n";
    return 1;
  }
  return 0;
}

int run_smf_stub(const SmfStubOptions& options, std::ostream& log,
                 std::atomic<bool>* stop_flag) {
  const auto colon = options.listen.rfind(':');
  if (colon == std::string::npos) {
    return fail(log, "listen must be host:port");
  }
  int port = 0;
  try {
    port = std::stoi(options.listen.substr(colon + 1));
  } catch (const std::exception&) {
    return fail(log, "listen port is not a number");
  }
  SmfStub stub(options.listen.substr(0, colon), port, options.log_path);
  if (auto status = stub.start(); !status.ok()) return fail(log, status.error());
  log << "smf-stub: listening on port " << stub.port() << '\n';
  while (stop_flag == nullptr || !stop_flag->load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  stub.stop();
  return 0;
}

}  // namespace gtpulse::cli

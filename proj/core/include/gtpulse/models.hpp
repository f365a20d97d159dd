#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gtpulse/dataset.hpp"
#include "gtpulse/matrix.hpp"
#include "gtpulse/metrics.hpp"
#include "gtpulse/result.hpp"

namespace gtpulse {

enum class ModelKind { kKnn, kDecisionTree, kRandomForest, kGradientBoost };

std::string_view model_kind_name(ModelKind kind);
Result<ModelKind> model_kind_from_name(std::string_view name);

struct KnnParams {
  std::size_t k = 5;
};

struct TreeParams {
  std::size_t max_depth = 12;
  std::size_t min_leaf = 1;
};

struct ForestParams {
  std::size_t n_trees = 25;
  // Fraction of features drawn per split; 1.0 scans all features in index
  // order, which is what makes a single-tree forest reproduce the plain
  // decision tree exactly.
  double feature_subsample = 0.5;
  bool bootstrap = true;
  TreeParams tree;
};

struct BoostParams {
  std::size_t n_rounds = 50;
  double learning_rate = 0.2;  // in (0, 1]
  std::size_t max_depth = 3;
  std::size_t min_leaf = 1;
};

struct ModelSpec {
  std::variant<KnnParams, TreeParams, ForestParams, BoostParams> params;
  std::uint64_t seed = 0;

  ModelKind kind() const {
    return static_cast<ModelKind>(params.index());
  }
};

Status validate_spec(const ModelSpec& spec);

// Per-feature min-max scaling fit on the training data; a constant feature
// maps to 0.
struct MinMaxScaler {
  std::vector<double> min;
  std::vector<double> range;  // 0 for constant features

  void fit(const Matrix& data);
  void transform_row(const double* in, double* out) const;
  Matrix transform(const Matrix& data) const;
};

struct KnnState {
  MinMaxScaler scaler;
  Matrix points;  // scaled training features
  std::vector<int> labels;
};

// feature < 0 marks a leaf. Split rule: value <= threshold goes left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> probs;  // leaf class frequencies
};

struct TreeState {
  std::vector<TreeNode> nodes;  // root at 0

  const std::vector<double>& predict_row(const double* row) const;
  std::size_t depth() const;
};

struct ForestState {
  std::vector<TreeState> trees;
};

struct RegNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegTree {
  std::vector<RegNode> nodes;

  double predict_row(const double* row) const;
};

struct BoostState {
  std::vector<double> init_scores;           // per class, log priors
  std::vector<std::vector<RegTree>> rounds;  // [round][class]
  std::vector<double> round_losses;          // train NLL, index 0 = before any round
};

struct TrainedModel {
  ModelSpec spec;
  std::vector<std::string> class_names;
  std::size_t feature_count = 0;
  std::variant<KnnState, TreeState, ForestState, BoostState> state;
};

// Deterministic in (spec, train): refitting with identical inputs yields
// identical predictions everywhere. Training data must be non-empty.
Result<TrainedModel> fit(const ModelSpec& spec, const Dataset& train);

// m x class_count matrix; every row is non-negative and sums to 1 within
// 1e-6. Column layout follows model.class_names.
Result<Matrix> predict_proba(const TrainedModel& model, const Matrix& features);

// Argmax of predict_proba; probability ties resolve to the lowest class
// index.
Result<std::vector<int>> predict(const TrainedModel& model, const Matrix& features);

struct EvalProtocol {
  std::size_t runs = 10;
  double test_fraction = 0.2;
  bool stratified = true;
  std::uint64_t base_seed = 0;
};

struct EvalOutcome {
  std::vector<ClassifierReport> per_run;
  ClassifierReport mean;
};

// Run i splits with seed base_seed + i, fits on the training side, and
// scores the held-out side. The averaged report is the field-wise mean.
Result<EvalOutcome> evaluate(const ModelSpec& spec, const Dataset& data,
                             const EvalProtocol& protocol);

// Versioned JSON document: kind, hyperparameters, learned structure.
Status save_model(const TrainedModel& model, const std::string& path);
Result<TrainedModel> load_model(const std::string& path);
std::string model_to_json(const TrainedModel& model);
Result<TrainedModel> model_from_json(const std::string& text);

}  // namespace gtpulse

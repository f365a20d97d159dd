#include "gtpulse/models.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "gtpulse/io_util.hpp"
#include "gtpulse/rng.hpp"
#include "gtpulse/version.hpp"

namespace gtpulse {

namespace {

using nlohmann::json;

// Score offset standing in for log(0) on classes absent from the training
// labels; keeps the model JSON finite while the class probability vanishes.
constexpr double kAbsentClassScore = -50.0;

constexpr double kSplitGainEpsilon = 1e-12;

}  // namespace

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kKnn: return "knn";
    case ModelKind::kDecisionTree: return "decision_tree";
    case ModelKind::kRandomForest: return "random_forest";
    case ModelKind::kGradientBoost: return "gradient_boost";
  }
  return "unknown";
}

Result<ModelKind> model_kind_from_name(std::string_view name) {
  if (name == "knn") return ModelKind::kKnn;
  if (name == "decision_tree" || name == "dt") return ModelKind::kDecisionTree;
  if (name == "random_forest" || name == "rf") return ModelKind::kRandomForest;
  if (name == "gradient_boost" || name == "gb" || name == "catboost-like") {
    return ModelKind::kGradientBoost;
  }
  return make_error(Errc::bad_config, "unknown model kind '" + std::string(name) + "'");
}

Status validate_spec(const ModelSpec& spec) {
  switch (spec.kind()) {
    case ModelKind::kKnn: {
      const auto& p = std::get<KnnParams>(spec.params);
      if (p.k < 1) return make_error(Errc::bad_config, "knn k must be >= 1");
      break;
    }
    case ModelKind::kDecisionTree: {
      const auto& p = std::get<TreeParams>(spec.params);
      if (p.max_depth < 1 || p.min_leaf < 1) {
        return make_error(Errc::bad_config, "tree depth and min_leaf must be >= 1");
      }
      break;
    }
    case ModelKind::kRandomForest: {
      const auto& p = std::get<ForestParams>(spec.params);
      if (p.n_trees < 1) return make_error(Errc::bad_config, "forest needs >= 1 tree");
      if (p.feature_subsample <= 0.0 || p.feature_subsample > 1.0) {
        return make_error(Errc::bad_config, "feature_subsample must be in (0, 1]");
      }
      if (p.tree.max_depth < 1 || p.tree.min_leaf < 1) {
        return make_error(Errc::bad_config, "tree depth and min_leaf must be >= 1");
      }
      break;
    }
    case ModelKind::kGradientBoost: {
      const auto& p = std::get<BoostParams>(spec.params);
      if (p.n_rounds < 1) return make_error(Errc::bad_config, "boost needs >= 1 round");
      if (p.learning_rate <= 0.0 || p.learning_rate > 1.0) {
        return make_error(Errc::bad_config, "learning_rate must be in (0, 1]");
      }
      if (p.max_depth < 1 || p.min_leaf < 1) {
        return make_error(Errc::bad_config, "tree depth and min_leaf must be >= 1");
      }
      break;
    }
  }
  return {};
}

void MinMaxScaler::fit(const Matrix& data) {
  min.assign(data.cols, 0.0);
  range.assign(data.cols, 0.0);
  if (data.rows == 0) return;
  std::vector<double> max_v(data.cols);
  for (std::size_t c = 0; c < data.cols; ++c) {
    min[c] = data.at(0, c);
    max_v[c] = data.at(0, c);
  }
  for (std::size_t r = 1; r < data.rows; ++r) {
    for (std::size_t c = 0; c < data.cols; ++c) {
      min[c] = std::min(min[c], data.at(r, c));
      max_v[c] = std::max(max_v[c], data.at(r, c));
    }
  }
  for (std::size_t c = 0; c < data.cols; ++c) {
    range[c] = max_v[c] - min[c];
  }
}

void MinMaxScaler::transform_row(const double* in, double* out) const {
  for (std::size_t c = 0; c < min.size(); ++c) {
    out[c] = range[c] > 0.0 ? (in[c] - min[c]) / range[c] : 0.0;
  }
}

Matrix MinMaxScaler::transform(const Matrix& data) const {
  assert(data.cols == min.size());
  Matrix out(data.rows, data.cols);
  for (std::size_t r = 0; r < data.rows; ++r) {
    transform_row(data.row(r), out.row(r));
  }
  return out;
}

const std::vector<double>& TreeState::predict_row(const double* row) const {
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    at = row[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(at)].probs;
}

std::size_t TreeState::depth() const {
  std::function<std::size_t(int)> walk = [&](int at) -> std::size_t {
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    if (node.feature < 0) return 0;
    return 1 + std::max(walk(node.left), walk(node.right));
  };
  return nodes.empty() ? 0 : walk(0);
}

double RegTree::predict_row(const double* row) const {
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const RegNode& node = nodes[static_cast<std::size_t>(at)];
    at = row[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(at)].value;
}

namespace {

// Supplies candidate feature indices for one split, in ascending order.
using FeatureProvider = std::function<const std::vector<int>&()>;

struct ClassTreeBuilder {
  const Matrix& features;
  const std::vector<int>& labels;
  std::size_t n_classes;
  TreeParams params;
  FeatureProvider candidates;
  TreeState tree;

  int build(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
            std::size_t depth) {
    const std::size_t total = end - begin;
    std::vector<double> counts(n_classes, 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      counts[static_cast<std::size_t>(labels[idx[i]])] += 1.0;
    }
    double gini_parent = 1.0;
    for (const double c : counts) {
      const double p = c / static_cast<double>(total);
      gini_parent -= p * p;
    }

    const bool can_split = depth < params.max_depth &&
                           total >= 2 * params.min_leaf && gini_parent > 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = kSplitGainEpsilon;

    if (can_split) {
      std::vector<std::pair<double, int>> sorted(total);
      std::vector<double> left_counts(n_classes);
      for (const int f : candidates()) {
        for (std::size_t i = 0; i < total; ++i) {
          sorted[i] = {features.at(idx[begin + i], static_cast<std::size_t>(f)),
                       labels[idx[begin + i]]};
        }
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::fill(left_counts.begin(), left_counts.end(), 0.0);
        for (std::size_t i = 0; i + 1 < total; ++i) {
          left_counts[static_cast<std::size_t>(sorted[i].second)] += 1.0;
          if (sorted[i].first == sorted[i + 1].first) continue;
          const std::size_t n_left = i + 1;
          const std::size_t n_right = total - n_left;
          if (n_left < params.min_leaf || n_right < params.min_leaf) continue;
          const double threshold = sorted[i].first / 2.0 + sorted[i + 1].first / 2.0;
          // Midpoints that round onto a neighbor would make an empty child.
          if (threshold <= sorted[i].first || threshold >= sorted[i + 1].first) {
            continue;
          }
          double gini_l = 1.0;
          double gini_r = 1.0;
          for (std::size_t c = 0; c < n_classes; ++c) {
            const double pl = left_counts[c] / static_cast<double>(n_left);
            const double pr =
                (counts[c] - left_counts[c]) / static_cast<double>(n_right);
            gini_l -= pl * pl;
            gini_r -= pr * pr;
          }
          const double weighted =
              (static_cast<double>(n_left) * gini_l +
               static_cast<double>(n_right) * gini_r) /
              static_cast<double>(total);
          const double gain = gini_parent - weighted;
          // Strict improvement keeps the first (lowest feature, lowest
          // threshold) of equal-gain splits.
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = f;
            best_threshold = threshold;
          }
        }
      }
    }

    const int node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (best_feature < 0) {
      auto& probs = tree.nodes[static_cast<std::size_t>(node_index)].probs;
      probs.resize(n_classes);
      for (std::size_t c = 0; c < n_classes; ++c) {
        probs[c] = counts[c] / static_cast<double>(total);
      }
      return node_index;
    }

    const auto mid_it = std::partition(
        idx.begin() + static_cast<std::ptrdiff_t>(begin),
        idx.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t row) {
          return features.at(row, static_cast<std::size_t>(best_feature)) <=
                 best_threshold;
        });
    const std::size_t mid = static_cast<std::size_t>(mid_it - idx.begin());
    assert(mid > begin && mid < end);

    const int left = build(idx, begin, mid, depth + 1);
    const int right = build(idx, mid, end, depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(node_index)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left;
    node.right = right;
    return node_index;
  }
};

TreeState build_class_tree(const Matrix& features, const std::vector<int>& labels,
                           const std::vector<std::size_t>& rows,
                           std::size_t n_classes, const TreeParams& params,
                           FeatureProvider candidates) {
  ClassTreeBuilder builder{features, labels, n_classes, params,
                           std::move(candidates), TreeState{}};
  std::vector<std::size_t> idx = rows;
  builder.build(idx, 0, idx.size(), 0);
  return std::move(builder.tree);
}

// Regression tree on gradient/hessian pairs: splits maximize variance
// reduction of the gradient, leaves take the Newton step sum(g)/sum(h).
struct RegTreeBuilder {
  const Matrix& features;
  const std::vector<double>& gradient;
  const std::vector<double>& hessian;
  std::size_t max_depth;
  std::size_t min_leaf;
  RegTree tree;

  int build(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
            std::size_t depth) {
    const std::size_t total = end - begin;
    double sum_g = 0.0;
    double sum_sq = 0.0;
    double sum_h = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      sum_g += gradient[idx[i]];
      sum_sq += gradient[idx[i]] * gradient[idx[i]];
      sum_h += hessian[idx[i]];
    }
    const double sse_parent =
        sum_sq - sum_g * sum_g / static_cast<double>(total);

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = kSplitGainEpsilon * (1.0 + std::abs(sse_parent));

    if (depth < max_depth && total >= 2 * min_leaf) {
      std::vector<std::pair<double, double>> sorted(total);  // value, gradient
      for (std::size_t f = 0; f < features.cols; ++f) {
        for (std::size_t i = 0; i < total; ++i) {
          sorted[i] = {features.at(idx[begin + i], f), gradient[idx[begin + i]]};
        }
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        double left_sum = 0.0;
        double left_sq = 0.0;
        for (std::size_t i = 0; i + 1 < total; ++i) {
          left_sum += sorted[i].second;
          left_sq += sorted[i].second * sorted[i].second;
          if (sorted[i].first == sorted[i + 1].first) continue;
          const std::size_t n_left = i + 1;
          const std::size_t n_right = total - n_left;
          if (n_left < min_leaf || n_right < min_leaf) continue;
          const double threshold = sorted[i].first / 2.0 + sorted[i + 1].first / 2.0;
          if (threshold <= sorted[i].first || threshold >= sorted[i + 1].first) {
            continue;
          }
          const double right_sum = sum_g - left_sum;
          const double right_sq = sum_sq - left_sq;
          const double sse_l =
              left_sq - left_sum * left_sum / static_cast<double>(n_left);
          const double sse_r =
              right_sq - right_sum * right_sum / static_cast<double>(n_right);
          const double gain = sse_parent - sse_l - sse_r;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            best_threshold = threshold;
          }
        }
      }
    }

    const int node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (best_feature < 0) {
      tree.nodes[static_cast<std::size_t>(node_index)].value =
          sum_g / (sum_h + 1e-12);
      return node_index;
    }

    const auto mid_it = std::partition(
        idx.begin() + static_cast<std::ptrdiff_t>(begin),
        idx.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t row) {
          return features.at(row, static_cast<std::size_t>(best_feature)) <=
                 best_threshold;
        });
    const std::size_t mid = static_cast<std::size_t>(mid_it - idx.begin());
    assert(mid > begin && mid < end);

    const int left = build(idx, begin, mid, depth + 1);
    const int right = build(idx, mid, end, depth + 1);
    RegNode& node = tree.nodes[static_cast<std::size_t>(node_index)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left;
    node.right = right;
    return node_index;
  }
};

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

void softmax_row(const double* scores, double* probs, std::size_t k) {
  double max_score = scores[0];
  for (std::size_t c = 1; c < k; ++c) max_score = std::max(max_score, scores[c]);
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    probs[c] = std::exp(scores[c] - max_score);
    sum += probs[c];
  }
  for (std::size_t c = 0; c < k; ++c) probs[c] /= sum;
}

TrainedModel fit_knn(const ModelSpec& spec, const Dataset& train) {
  TrainedModel model;
  model.spec = spec;
  model.class_names = train.class_names;
  model.feature_count = train.dim();
  KnnState state;
  state.scaler.fit(train.features);
  state.points = state.scaler.transform(train.features);
  state.labels = train.labels;
  model.state = std::move(state);
  return model;
}

TrainedModel fit_decision_tree(const ModelSpec& spec, const Dataset& train) {
  TrainedModel model;
  model.spec = spec;
  model.class_names = train.class_names;
  model.feature_count = train.dim();
  std::vector<int> every(train.dim());
  std::iota(every.begin(), every.end(), 0);
  model.state = build_class_tree(
      train.features, train.labels, all_rows(train.size()),
      train.class_names.size(), std::get<TreeParams>(spec.params),
      [&every]() -> const std::vector<int>& { return every; });
  return model;
}

TrainedModel fit_random_forest(const ModelSpec& spec, const Dataset& train) {
  const auto& params = std::get<ForestParams>(spec.params);
  TrainedModel model;
  model.spec = spec;
  model.class_names = train.class_names;
  model.feature_count = train.dim();

  const std::size_t d = train.dim();
  const std::size_t mtry = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(params.feature_subsample *
                                            static_cast<double>(d))),
      1, d);

  ForestState forest;
  forest.trees.reserve(params.n_trees);
  std::vector<int> every(d);
  std::iota(every.begin(), every.end(), 0);

  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng(mix_seed(spec.seed, t));
    std::vector<std::size_t> rows;
    if (params.bootstrap) {
      rows.resize(train.size());
      for (auto& row : rows) {
        row = static_cast<std::size_t>(rng.below(train.size()));
      }
    } else {
      rows = all_rows(train.size());
    }

    std::vector<int> pool = every;
    std::vector<int> drawn(mtry);
    FeatureProvider provider;
    if (mtry == d) {
      // Full sampling scans features in index order, matching the plain
      // decision tree split-for-split.
      provider = [&every]() -> const std::vector<int>& { return every; };
    } else {
      provider = [&rng, &pool, &drawn, mtry]() -> const std::vector<int>& {
        for (std::size_t i = 0; i < mtry; ++i) {
          const std::size_t j =
              i + static_cast<std::size_t>(rng.below(pool.size() - i));
          std::swap(pool[i], pool[j]);
          drawn[i] = pool[i];
        }
        std::sort(drawn.begin(), drawn.end());
        return drawn;
      };
    }
    forest.trees.push_back(build_class_tree(train.features, train.labels, rows,
                                            train.class_names.size(),
                                            params.tree, provider));
  }
  model.state = std::move(forest);
  return model;
}

TrainedModel fit_gradient_boost(const ModelSpec& spec, const Dataset& train) {
  const auto& params = std::get<BoostParams>(spec.params);
  const std::size_t n = train.size();
  const std::size_t k = train.class_names.size();

  TrainedModel model;
  model.spec = spec;
  model.class_names = train.class_names;
  model.feature_count = train.dim();

  BoostState state;
  state.init_scores.resize(k);
  const auto counts = train.class_counts();
  for (std::size_t c = 0; c < k; ++c) {
    state.init_scores[c] =
        counts[c] == 0 ? kAbsentClassScore
                       : std::log(static_cast<double>(counts[c]) /
                                  static_cast<double>(n));
  }

  Matrix scores(n, k);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      scores.at(r, c) = state.init_scores[c];
    }
  }

  Matrix probs(n, k);
  const auto train_nll = [&]() {
    for (std::size_t r = 0; r < n; ++r) {
      softmax_row(scores.row(r), probs.row(r), k);
    }
    double nll = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double p =
          probs.at(r, static_cast<std::size_t>(train.labels[r]));
      nll -= std::log(std::max(p, 1e-300));
    }
    return nll / static_cast<double>(n);
  };

  state.round_losses.push_back(train_nll());

  std::vector<double> gradient(n);
  std::vector<double> hessian(n);
  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    // probs hold the softmax of the scores entering this round (train_nll
    // refreshed them); all class trees in a round share that snapshot.
    std::vector<RegTree> class_trees;
    class_trees.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t r = 0; r < n; ++r) {
        const double p = probs.at(r, c);
        const double y = train.labels[r] == static_cast<int>(c) ? 1.0 : 0.0;
        gradient[r] = y - p;
        hessian[r] = p * (1.0 - p);
      }
      RegTreeBuilder builder{train.features, gradient,  hessian,
                             params.max_depth, params.min_leaf, RegTree{}};
      std::vector<std::size_t> idx = all_rows(n);
      builder.build(idx, 0, idx.size(), 0);
      class_trees.push_back(std::move(builder.tree));
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t r = 0; r < n; ++r) {
        scores.at(r, c) +=
            params.learning_rate * class_trees[c].predict_row(train.features.row(r));
      }
    }
    state.rounds.push_back(std::move(class_trees));
    state.round_losses.push_back(train_nll());
  }

  model.state = std::move(state);
  return model;
}

}  // namespace

Result<TrainedModel> fit(const ModelSpec& spec, const Dataset& train) {
  if (auto valid = validate_spec(spec); !valid.ok()) return valid.error();
  if (train.size() == 0) {
    return make_error(Errc::degenerate_data, "empty training set");
  }
  if (train.class_names.empty()) {
    return make_error(Errc::degenerate_data, "no classes declared");
  }
  for (const int label : train.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= train.class_names.size()) {
      return make_error(Errc::unknown_label, "training label outside class list");
    }
  }
  switch (spec.kind()) {
    case ModelKind::kKnn: return fit_knn(spec, train);
    case ModelKind::kDecisionTree: return fit_decision_tree(spec, train);
    case ModelKind::kRandomForest: return fit_random_forest(spec, train);
    case ModelKind::kGradientBoost: return fit_gradient_boost(spec, train);
  }
  return make_error(Errc::bad_config, "unreachable model kind");
}

Result<Matrix> predict_proba(const TrainedModel& model, const Matrix& features) {
  if (features.cols != model.feature_count) {
    return make_error(Errc::dimension_mismatch,
                      "expected " + std::to_string(model.feature_count) +
                          " features, got " + std::to_string(features.cols));
  }
  const std::size_t k = model.class_names.size();
  Matrix out(features.rows, k);

  if (const auto* knn = std::get_if<KnnState>(&model.state)) {
    const std::size_t kk =
        std::min(std::get<KnnParams>(model.spec.params).k, knn->points.rows);
    std::vector<double> scaled(model.feature_count);
    std::vector<std::pair<double, std::size_t>> dist(knn->points.rows);
    for (std::size_t r = 0; r < features.rows; ++r) {
      knn->scaler.transform_row(features.row(r), scaled.data());
      for (std::size_t t = 0; t < knn->points.rows; ++t) {
        double d2 = 0.0;
        const double* p = knn->points.row(t);
        for (std::size_t c = 0; c < model.feature_count; ++c) {
          const double diff = scaled[c] - p[c];
          d2 += diff * diff;
        }
        dist[t] = {d2, t};
      }
      // (distance, index) orders ties deterministically.
      std::partial_sort(dist.begin(),
                        dist.begin() + static_cast<std::ptrdiff_t>(kk),
                        dist.end());
      for (std::size_t i = 0; i < kk; ++i) {
        out.at(r, static_cast<std::size_t>(knn->labels[dist[i].second])) +=
            1.0 / static_cast<double>(kk);
      }
    }
    return out;
  }

  if (const auto* tree = std::get_if<TreeState>(&model.state)) {
    for (std::size_t r = 0; r < features.rows; ++r) {
      const auto& probs = tree->predict_row(features.row(r));
      std::copy(probs.begin(), probs.end(), out.row(r));
    }
    return out;
  }

  if (const auto* forest = std::get_if<ForestState>(&model.state)) {
    const double weight = 1.0 / static_cast<double>(forest->trees.size());
    for (std::size_t r = 0; r < features.rows; ++r) {
      for (const TreeState& tree : forest->trees) {
        const auto& probs = tree.predict_row(features.row(r));
        for (std::size_t c = 0; c < k; ++c) {
          out.at(r, c) += weight * probs[c];
        }
      }
    }
    return out;
  }

  const auto& boost = std::get<BoostState>(model.state);
  const double lr = std::get<BoostParams>(model.spec.params).learning_rate;
  std::vector<double> scores(k);
  for (std::size_t r = 0; r < features.rows; ++r) {
    for (std::size_t c = 0; c < k; ++c) scores[c] = boost.init_scores[c];
    for (const auto& round : boost.rounds) {
      for (std::size_t c = 0; c < k; ++c) {
        scores[c] += lr * round[c].predict_row(features.row(r));
      }
    }
    softmax_row(scores.data(), out.row(r), k);
  }
  return out;
}

Result<std::vector<int>> predict(const TrainedModel& model, const Matrix& features) {
  auto probs = predict_proba(model, features);
  if (!probs.ok()) return probs.error();
  const Matrix& p = probs.value();
  std::vector<int> labels(p.rows);
  for (std::size_t r = 0; r < p.rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < p.cols; ++c) {
      if (p.at(r, c) > p.at(r, best)) best = c;
    }
    labels[r] = static_cast<int>(best);
  }
  return labels;
}

Result<EvalOutcome> evaluate(const ModelSpec& spec, const Dataset& data,
                             const EvalProtocol& protocol) {
  if (protocol.runs < 1) {
    return make_error(Errc::bad_config, "protocol needs >= 1 run");
  }
  if (protocol.test_fraction <= 0.0 || protocol.test_fraction >= 1.0) {
    return make_error(Errc::bad_config, "test_fraction must be inside (0, 1)");
  }
  if (data.size() < 2) {
    return make_error(Errc::degenerate_data, "need at least 2 rows to split");
  }
  EvalOutcome outcome;
  for (std::size_t run = 0; run < protocol.runs; ++run) {
    const std::uint64_t split_seed = protocol.base_seed + run;
    const SplitIndices split =
        protocol.stratified
            ? stratified_split(data, protocol.test_fraction, split_seed)
            : shuffle_split(data, protocol.test_fraction, split_seed);
    const Dataset train = subset(data, split.train);
    const Dataset test = subset(data, split.test);

    auto model = fit(spec, train);
    if (!model.ok()) return model.error();
    auto predicted = predict(model.value(), test.features);
    if (!predicted.ok()) return predicted.error();
    auto scored =
        classification_report(test.labels, predicted.value(), data.class_names);
    if (!scored.ok()) return scored.error();
    outcome.per_run.push_back(scored.value().report);
  }

  const double n = static_cast<double>(outcome.per_run.size());
  for (const ClassifierReport& report : outcome.per_run) {
    outcome.mean.accuracy += report.accuracy / n;
    outcome.mean.precision += report.precision / n;
    outcome.mean.recall += report.recall / n;
    outcome.mean.f1 += report.f1 / n;
    outcome.mean.precision_macro += report.precision_macro / n;
    outcome.mean.recall_macro += report.recall_macro / n;
    outcome.mean.f1_macro += report.f1_macro / n;
  }
  return outcome;
}

namespace {

json tree_to_json(const TreeState& tree) {
  json nodes = json::array();
  for (const TreeNode& node : tree.nodes) {
    if (node.feature < 0) {
      nodes.push_back(json{{"p", node.probs}});
    } else {
      nodes.push_back(json{{"f", node.feature},
                           {"t", node.threshold},
                           {"l", node.left},
                           {"r", node.right}});
    }
  }
  return nodes;
}

TreeState tree_from_json(const json& nodes) {
  TreeState tree;
  for (const auto& entry : nodes) {
    TreeNode node;
    if (entry.contains("p")) {
      node.probs = entry["p"].get<std::vector<double>>();
    } else {
      node.feature = entry["f"].get<int>();
      node.threshold = entry["t"].get<double>();
      node.left = entry["l"].get<int>();
      node.right = entry["r"].get<int>();
    }
    tree.nodes.push_back(std::move(node));
  }
  return tree;
}

json regtree_to_json(const RegTree& tree) {
  json nodes = json::array();
  for (const RegNode& node : tree.nodes) {
    if (node.feature < 0) {
      nodes.push_back(json{{"v", node.value}});
    } else {
      nodes.push_back(json{{"f", node.feature},
                           {"t", node.threshold},
                           {"l", node.left},
                           {"r", node.right}});
    }
  }
  return nodes;
}

RegTree regtree_from_json(const json& nodes) {
  RegTree tree;
  for (const auto& entry : nodes) {
    RegNode node;
    if (entry.contains("v")) {
      node.value = entry["v"].get<double>();
    } else {
      node.feature = entry["f"].get<int>();
      node.threshold = entry["t"].get<double>();
      node.left = entry["l"].get<int>();
      node.right = entry["r"].get<int>();
    }
    tree.nodes.push_back(node);
  }
  return tree;
}

}  // namespace

std::string model_to_json(const TrainedModel& model) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = std::string(model_kind_name(model.spec.kind()));
  doc["seed"] = model.spec.seed;
  doc["class_names"] = model.class_names;
  doc["feature_count"] = model.feature_count;

  json hp;
  switch (model.spec.kind()) {
    case ModelKind::kKnn: {
      hp["k"] = std::get<KnnParams>(model.spec.params).k;
      break;
    }
    case ModelKind::kDecisionTree: {
      const auto& p = std::get<TreeParams>(model.spec.params);
      hp["max_depth"] = p.max_depth;
      hp["min_leaf"] = p.min_leaf;
      break;
    }
    case ModelKind::kRandomForest: {
      const auto& p = std::get<ForestParams>(model.spec.params);
      hp["n_trees"] = p.n_trees;
      hp["feature_subsample"] = p.feature_subsample;
      hp["bootstrap"] = p.bootstrap;
      hp["max_depth"] = p.tree.max_depth;
      hp["min_leaf"] = p.tree.min_leaf;
      break;
    }
    case ModelKind::kGradientBoost: {
      const auto& p = std::get<BoostParams>(model.spec.params);
      hp["n_rounds"] = p.n_rounds;
      hp["learning_rate"] = p.learning_rate;
      hp["max_depth"] = p.max_depth;
      hp["min_leaf"] = p.min_leaf;
      break;
    }
  }
  doc["hyperparameters"] = hp;

  json learned;
  if (const auto* knn = std::get_if<KnnState>(&model.state)) {
    learned["scaler"] = {{"min", knn->scaler.min}, {"range", knn->scaler.range}};
    learned["rows"] = knn->points.rows;
    learned["points"] = knn->points.data;
    learned["labels"] = knn->labels;
  } else if (const auto* tree = std::get_if<TreeState>(&model.state)) {
    learned["nodes"] = tree_to_json(*tree);
  } else if (const auto* forest = std::get_if<ForestState>(&model.state)) {
    json trees = json::array();
    for (const TreeState& t : forest->trees) trees.push_back(tree_to_json(t));
    learned["trees"] = std::move(trees);
  } else {
    const auto& boost = std::get<BoostState>(model.state);
    learned["init_scores"] = boost.init_scores;
    json rounds = json::array();
    for (const auto& round : boost.rounds) {
      json class_trees = json::array();
      for (const RegTree& t : round) class_trees.push_back(regtree_to_json(t));
      rounds.push_back(std::move(class_trees));
    }
    learned["rounds"] = std::move(rounds);
    learned["round_losses"] = boost.round_losses;
  }
  doc["learned"] = std::move(learned);
  return doc.dump(2) + "\n";
}

Result<TrainedModel> model_from_json(const std::string& text) {
  const json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    return make_error(Errc::bad_config, "model file is not valid JSON");
  }
  try {
    if (doc.at("format_version").get<int>() != kModelFormatVersion) {
      return make_error(Errc::bad_config, "unsupported model format version");
    }
    auto kind = model_kind_from_name(doc.at("kind").get<std::string>());
    if (!kind.ok()) return kind.error();

    TrainedModel model;
    model.spec.seed = doc.at("seed").get<std::uint64_t>();
    model.class_names = doc.at("class_names").get<std::vector<std::string>>();
    model.feature_count = doc.at("feature_count").get<std::size_t>();
    const json& hp = doc.at("hyperparameters");
    const json& learned = doc.at("learned");

    switch (kind.value()) {
      case ModelKind::kKnn: {
        model.spec.params = KnnParams{hp.at("k").get<std::size_t>()};
        KnnState state;
        state.scaler.min = learned.at("scaler").at("min").get<std::vector<double>>();
        state.scaler.range =
            learned.at("scaler").at("range").get<std::vector<double>>();
        state.points.rows = learned.at("rows").get<std::size_t>();
        state.points.cols = model.feature_count;
        state.points.data = learned.at("points").get<std::vector<double>>();
        state.labels = learned.at("labels").get<std::vector<int>>();
        if (state.points.data.size() != state.points.rows * state.points.cols ||
            state.labels.size() != state.points.rows) {
          return make_error(Errc::bad_config, "inconsistent knn state");
        }
        model.state = std::move(state);
        break;
      }
      case ModelKind::kDecisionTree: {
        model.spec.params = TreeParams{hp.at("max_depth").get<std::size_t>(),
                                       hp.at("min_leaf").get<std::size_t>()};
        model.state = tree_from_json(learned.at("nodes"));
        break;
      }
      case ModelKind::kRandomForest: {
        ForestParams params;
        params.n_trees = hp.at("n_trees").get<std::size_t>();
        params.feature_subsample = hp.at("feature_subsample").get<double>();
        params.bootstrap = hp.at("bootstrap").get<bool>();
        params.tree.max_depth = hp.at("max_depth").get<std::size_t>();
        params.tree.min_leaf = hp.at("min_leaf").get<std::size_t>();
        model.spec.params = params;
        ForestState state;
        for (const auto& tree : learned.at("trees")) {
          state.trees.push_back(tree_from_json(tree));
        }
        if (state.trees.empty()) {
          return make_error(Errc::bad_config, "forest without trees");
        }
        model.state = std::move(state);
        break;
      }
      case ModelKind::kGradientBoost: {
        BoostParams params;
        params.n_rounds = hp.at("n_rounds").get<std::size_t>();
        params.learning_rate = hp.at("learning_rate").get<double>();
        params.max_depth = hp.at("max_depth").get<std::size_t>();
        params.min_leaf = hp.at("min_leaf").get<std::size_t>();
        model.spec.params = params;
        BoostState state;
        state.init_scores = learned.at("init_scores").get<std::vector<double>>();
        for (const auto& round : learned.at("rounds")) {
          std::vector<RegTree> class_trees;
          for (const auto& tree : round) {
            class_trees.push_back(regtree_from_json(tree));
          }
          state.rounds.push_back(std::move(class_trees));
        }
        if (learned.contains("round_losses")) {
          state.round_losses = learned.at("round_losses").get<std::vector<double>>();
        }
        if (state.init_scores.size() != model.class_names.size()) {
          return make_error(Errc::bad_config, "inconsistent boost state");
        }
        model.state = std::move(state);
        break;
      }
    }
    if (auto valid = validate_spec(model.spec); !valid.ok()) return valid.error();
    return model;
  } catch (const json::exception& e) {
    return make_error(Errc::bad_config, std::string("model file: ") + e.what());
  }
}

Status save_model(const TrainedModel& model, const std::string& path) {
  return write_file(path, model_to_json(model));
}

Result<TrainedModel> load_model(const std::string& path) {
  auto content = read_file(path);
  if (!content.ok()) return content.error();
  return model_from_json(content.value());
}

}  // namespace gtpulse

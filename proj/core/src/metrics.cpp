#include "gtpulse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "gtpulse/io_util.hpp"
#include "gtpulse/version.hpp"

namespace gtpulse {

Result<std::vector<double>> min_max_normalize(const std::vector<double>& series) {
  if (series.empty()) {
    return make_error(Errc::empty_input, "cannot normalize an empty series");
  }
  const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  std::vector<double> out(series.size(), 0.0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      out[i] = (series[i] - lo) / range;
    }
  }
  return out;
}

namespace {

// Percentage MAPE over points with nonzero truth; counts the excluded rest.
std::pair<double, std::size_t> mape_excluding_zero_truth(
    const std::vector<double>& truth, const std::vector<double>& estimate) {
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0.0) continue;
    sum += std::abs((estimate[i] - truth[i]) / truth[i]);
    ++used;
  }
  const double mape = used == 0 ? 0.0 : 100.0 * sum / static_cast<double>(used);
  return {mape, truth.size() - used};
}

}  // namespace

Result<RegressionReport> regression_report(const std::vector<double>& truth,
                                           const std::vector<double>& estimate) {
  if (truth.empty()) {
    return make_error(Errc::empty_input, "no samples to score");
  }
  if (truth.size() != estimate.size()) {
    return make_error(Errc::size_mismatch,
                      "truth has " + std::to_string(truth.size()) + " points, estimate " +
                          std::to_string(estimate.size()));
  }

  // Joint normalization over the union range keeps the two series comparable.
  double lo = truth[0];
  double hi = truth[0];
  for (const double v : truth) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (const double v : estimate) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = hi - lo;
  const auto normalize = [&](const std::vector<double>& series) {
    std::vector<double> out(series.size(), 0.0);
    if (range > 0.0) {
      for (std::size_t i = 0; i < series.size(); ++i) {
        out[i] = (series[i] - lo) / range;
      }
    }
    return out;
  };
  const std::vector<double> truth_n = normalize(truth);
  const std::vector<double> estimate_n = normalize(estimate);

  RegressionReport report;
  report.sample_count = truth.size();

  const double n = static_cast<double>(truth.size());
  double ss_res = 0.0;
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < truth_n.size(); ++i) {
    const double err = estimate_n[i] - truth_n[i];
    ss_res += err * err;
    abs_sum += std::abs(err);
  }
  report.mse_norm = ss_res / n;
  report.mae_norm = abs_sum / n;

  const double mean_t =
      std::accumulate(truth_n.begin(), truth_n.end(), 0.0) / n;
  double ss_tot = 0.0;
  for (const double t : truth_n) {
    ss_tot += (t - mean_t) * (t - mean_t);
  }
  if (ss_tot == 0.0) {
    // Constant truth: perfect residuals score 1, anything else 0.
    report.r2_norm = ss_res == 0.0 ? 1.0 : 0.0;
  } else {
    report.r2_norm = 1.0 - ss_res / ss_tot;
  }

  std::tie(report.mape_norm, report.mape_norm_excluded) =
      mape_excluding_zero_truth(truth_n, estimate_n);
  std::tie(report.mape_orig, report.mape_orig_excluded) =
      mape_excluding_zero_truth(truth, estimate);
  return report;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t sum = 0;
  for (const auto& row : counts) {
    for (const std::size_t c : row) sum += c;
  }
  return sum;
}

std::size_t ConfusionMatrix::diagonal() const {
  std::size_t sum = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) sum += counts[i][i];
  return sum;
}

Result<ClassificationResult> classification_report(
    const std::vector<int>& truth, const std::vector<int>& predicted,
    const std::vector<std::string>& classes) {
  if (truth.empty()) {
    return make_error(Errc::empty_input, "no labels to score");
  }
  if (truth.size() != predicted.size()) {
    return make_error(Errc::size_mismatch,
                      "truth has " + std::to_string(truth.size()) + " labels, predicted " +
                          std::to_string(predicted.size()));
  }
  const int k = static_cast<int>(classes.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= k || predicted[i] < 0 || predicted[i] >= k) {
      return make_error(Errc::unknown_label,
                        "label outside the declared class list at row " +
                            std::to_string(i));
    }
  }

  ClassificationResult result;
  result.confusion.classes = classes;
  result.confusion.counts.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++result.confusion.counts[truth[i]][predicted[i]];
  }

  const double total = static_cast<double>(truth.size());
  result.report.accuracy = static_cast<double>(result.confusion.diagonal()) / total;

  double weighted_p = 0.0, weighted_r = 0.0, weighted_f = 0.0;
  double macro_p = 0.0, macro_r = 0.0, macro_f = 0.0;
  for (int c = 0; c < k; ++c) {
    std::size_t tp = result.confusion.counts[c][c];
    std::size_t support = 0;  // tp + fn
    std::size_t predicted_c = 0;  // tp + fp
    for (int other = 0; other < k; ++other) {
      support += result.confusion.counts[c][other];
      predicted_c += result.confusion.counts[other][c];
    }
    const double precision =
        predicted_c == 0 ? 0.0 : static_cast<double>(tp) / predicted_c;
    const double recall = support == 0 ? 0.0 : static_cast<double>(tp) / support;
    const double f1 = (precision + recall) == 0.0
                          ? 0.0
                          : 2.0 * precision * recall / (precision + recall);
    const double weight = static_cast<double>(support) / total;
    weighted_p += weight * precision;
    weighted_r += weight * recall;
    weighted_f += weight * f1;
    macro_p += precision / k;
    macro_r += recall / k;
    macro_f += f1 / k;
  }
  result.report.precision = weighted_p;
  result.report.recall = weighted_r;
  result.report.f1 = weighted_f;
  result.report.precision_macro = macro_p;
  result.report.recall_macro = macro_r;
  result.report.f1_macro = macro_f;
  return result;
}

namespace {

struct BinaryScores {
  std::vector<double> scores;  // positive-class score per sample
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::vector<int> sorted_idx;  // by score descending
};

Result<BinaryScores> prepare_binary(const std::vector<int>& truth,
                                    const Matrix& scores, int positive_class) {
  if (truth.empty()) {
    return make_error(Errc::empty_input, "no samples");
  }
  if (scores.rows != truth.size()) {
    return make_error(Errc::size_mismatch, "scores row count != truth size");
  }
  if (positive_class < 0 || static_cast<std::size_t>(positive_class) >= scores.cols) {
    return make_error(Errc::unknown_label, "positive class outside score columns");
  }
  for (std::size_t r = 0; r < scores.rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < scores.cols; ++c) sum += scores.at(r, c);
    if (std::abs(sum - 1.0) > 1e-6) {
      return make_error(Errc::invalid_scores,
                        "score row " + std::to_string(r) + " sums to " +
                            format_double(sum));
    }
  }

  BinaryScores prep;
  prep.scores.resize(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    prep.scores[i] = scores.at(i, static_cast<std::size_t>(positive_class));
    if (truth[i] == positive_class) {
      ++prep.positives;
    } else {
      ++prep.negatives;
    }
  }
  if (prep.positives == 0) {
    return make_error(Errc::degenerate_class, "positive class absent from truth");
  }
  if (prep.negatives == 0) {
    return make_error(Errc::degenerate_class, "no negative examples for the class");
  }
  prep.sorted_idx.resize(truth.size());
  std::iota(prep.sorted_idx.begin(), prep.sorted_idx.end(), 0);
  std::stable_sort(prep.sorted_idx.begin(), prep.sorted_idx.end(),
                   [&](int a, int b) { return prep.scores[a] > prep.scores[b]; });
  return prep;
}

double trapezoid_auc(const std::vector<CurvePoint>& points) {
  double auc = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double dx = points[i].x - points[i - 1].x;
    auc += dx * (points[i].y + points[i - 1].y) / 2.0;
  }
  return auc;
}

}  // namespace

Result<CurvePoints> roc_curve(const std::vector<int>& truth, const Matrix& scores,
                              int positive_class) {
  auto prep = prepare_binary(truth, scores, positive_class);
  if (!prep.ok()) return prep.error();
  const BinaryScores& bin = prep.value();

  CurvePoints curve;
  curve.points.push_back(
      CurvePoint{0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < bin.sorted_idx.size()) {
    const double threshold = bin.scores[bin.sorted_idx[i]];
    // Consume the whole tie group before emitting a point.
    while (i < bin.sorted_idx.size() && bin.scores[bin.sorted_idx[i]] == threshold) {
      if (truth[bin.sorted_idx[i]] == positive_class) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    curve.points.push_back(
        CurvePoint{static_cast<double>(fp) / bin.negatives,
                   static_cast<double>(tp) / bin.positives, threshold});
  }
  curve.auc = trapezoid_auc(curve.points);
  return curve;
}

Result<CurvePoints> precision_recall_curve(const std::vector<int>& truth,
                                           const Matrix& scores,
                                           int positive_class) {
  auto prep = prepare_binary(truth, scores, positive_class);
  if (!prep.ok()) return prep.error();
  const BinaryScores& bin = prep.value();

  CurvePoints curve;
  curve.points.push_back(
      CurvePoint{0.0, 1.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < bin.sorted_idx.size()) {
    const double threshold = bin.scores[bin.sorted_idx[i]];
    while (i < bin.sorted_idx.size() && bin.scores[bin.sorted_idx[i]] == threshold) {
      if (truth[bin.sorted_idx[i]] == positive_class) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    curve.points.push_back(CurvePoint{static_cast<double>(tp) / bin.positives,
                                      static_cast<double>(tp) / (tp + fp),
                                      threshold});
  }
  curve.auc = trapezoid_auc(curve.points);
  return curve;
}

Status write_curve_csv(const CurvePoints& curve, const std::string& path) {
  std::ostringstream out;
  out << "# format_version=" << kReportFormatVersion
      << " auc=" << format_double(curve.auc) << '\n';
  out << "x,y,threshold\n";
  for (const CurvePoint& p : curve.points) {
    out << format_double(p.x) << ',' << format_double(p.y) << ','
        << format_double(p.threshold) << '\n';
  }
  return write_file(path, out.str());
}

}  // namespace gtpulse

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gtpulse/matrix.hpp"
#include "gtpulse/result.hpp"

namespace gtpulse {

// Regression error metrics. The *_norm values are computed after jointly
// min-max normalizing truth and estimate over their union range, so they are
// dimensionless; mape_orig works on the raw series. MAPE is a percentage and
// skips points whose truth value is exactly zero (the skip counts are
// reported, not hidden).
struct RegressionReport {
  double mse_norm = 0.0;
  double mae_norm = 0.0;
  double mape_norm = 0.0;
  double r2_norm = 0.0;
  double mape_orig = 0.0;
  std::size_t mape_norm_excluded = 0;
  std::size_t mape_orig_excluded = 0;
  std::size_t sample_count = 0;
};

// (x - min) / (max - min); a constant series maps to all zeros.
Result<std::vector<double>> min_max_normalize(const std::vector<double>& series);

Result<RegressionReport> regression_report(const std::vector<double>& truth,
                                           const std::vector<double>& estimate);

// rows = truth, columns = prediction.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const;
  std::size_t diagonal() const;
};

// Support-weighted averages, with macro averages alongside for comparison.
struct ClassifierReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;
};

struct ClassificationResult {
  ConfusionMatrix confusion;
  ClassifierReport report;
};

// Labels are indices into `classes`. Classes absent from the truth
// contribute zero with zero weight.
Result<ClassificationResult> classification_report(
    const std::vector<int>& truth, const std::vector<int>& predicted,
    const std::vector<std::string>& classes);

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  double threshold = 0.0;
};

struct CurvePoints {
  std::vector<CurvePoint> points;  // x monotone non-decreasing
  double auc = 0.0;                // trapezoid rule
};

// One-vs-rest ROC: x = false positive rate, y = true positive rate, swept
// over every distinct score of the positive class. Score rows must sum to 1
// within 1e-6. DegenerateClass when the positive class has no positive or no
// negative examples in the truth.
Result<CurvePoints> roc_curve(const std::vector<int>& truth, const Matrix& scores,
                              int positive_class);

// One-vs-rest precision/recall: x = recall, y = precision, anchored at
// (0, 1) before the sweep.
Result<CurvePoints> precision_recall_curve(const std::vector<int>& truth,
                                           const Matrix& scores,
                                           int positive_class);

// CSV emission: "# format_version=1" comment, then x,y,threshold rows.
Status write_curve_csv(const CurvePoints& curve, const std::string& path);

}  // namespace gtpulse

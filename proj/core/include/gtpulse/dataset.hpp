#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gtpulse/matrix.hpp"
#include "gtpulse/result.hpp"

namespace gtpulse {

// Labeled feature rows for game classification.
struct Dataset {
  Matrix features;  // n x d, finite values only
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  // Ingestion bookkeeping.
  std::size_t rows_dropped = 0;
  std::map<std::string, std::map<std::string, int>> categorical_codes;

  std::size_t size() const { return features.rows; }
  std::size_t dim() const { return features.cols; }
  std::vector<std::size_t> class_counts() const;
};

// CSV ingestion. Header row required; the label column is removed from the
// features. A column is numeric when every non-empty cell parses as a finite
// number; any other column is categorical and its values are dictionary-coded
// in order of first appearance. Rows with an empty cell or the wrong field
// count are dropped and counted.
Result<Dataset> load_dataset(const std::string& csv_path,
                             const std::string& label_column = "game");

// Gaussian blobs: one unit-covariance centroid per class, mutual centroid
// distance proportional to `separation`. With three classes the sizes follow
// the observed game-traffic imbalance (55/21/24 percent for LOL/TFT/VAL);
// otherwise classes are uniform. Deterministic in `seed`.
Dataset synth_dataset(std::size_t n, std::size_t d, std::size_t class_count,
                      double separation, std::uint64_t seed);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Per-class shuffle-and-take split preserving class proportions. A class
// with a single row stays in the training side.
SplitIndices stratified_split(const Dataset& dataset, double test_fraction,
                              std::uint64_t seed);

// Plain shuffle split, no stratification.
SplitIndices shuffle_split(const Dataset& dataset, double test_fraction,
                           std::uint64_t seed);

Dataset subset(const Dataset& dataset, const std::vector<std::size_t>& indices);

}  // namespace gtpulse

#include "gtpulse/dataset.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "gtpulse/io_util.hpp"
#include "gtpulse/rng.hpp"

namespace gtpulse {

namespace {

// The class-size imbalance reported for the LOL/TFT/VAL gaming traffic mix.
constexpr double kThreeClassProportions[3] = {0.55, 0.21, 0.24};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

bool parse_finite_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

// Largest-remainder apportionment of n over the given proportions.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& props) {
  const std::size_t k = props.size();
  std::vector<std::size_t> counts(k, 0);
  std::vector<std::pair<double, std::size_t>> remainders(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = static_cast<double>(n) * props[i];
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainders[i] = {exact - std::floor(exact), i};
    assigned += counts[i];
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) {
    ++counts[remainders[i % k].second];
  }
  return counts;
}

}  // namespace

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (const int label : labels) {
    ++counts[static_cast<std::size_t>(label)];
  }
  return counts;
}

Result<Dataset> load_dataset(const std::string& csv_path,
                             const std::string& label_column) {
  auto content = read_file(csv_path);
  if (!content.ok()) return content.error();

  std::vector<std::vector<std::string>> rows;
  {
    std::istringstream in(content.value());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      rows.push_back(csv_split(line));
    }
  }
  if (rows.empty()) {
    return make_error(Errc::empty_after_cleaning, csv_path + " has no rows");
  }

  const std::vector<std::string> header = rows.front();
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    return make_error(Errc::missing_label_column,
                      "no column named '" + label_column + "' in " + csv_path);
  }
  const std::size_t label_idx =
      static_cast<std::size_t>(label_it - header.begin());
  const std::size_t width = header.size();

  // First pass: a column is numeric unless some non-empty cell refuses to
  // parse as a finite number.
  std::vector<bool> numeric(width, true);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != width) continue;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_idx || !numeric[c]) continue;
      const std::string cell = trim(rows[r][c]);
      double value;
      if (!cell.empty() && !parse_finite_double(cell, value)) {
        numeric[c] = false;
      }
    }
  }

  Dataset dataset;
  for (std::size_t c = 0; c < width; ++c) {
    if (c != label_idx) dataset.feature_names.push_back(header[c]);
  }

  std::map<std::string, int> class_index;
  std::vector<double> row_buffer(dataset.feature_names.size());
  std::vector<double> feature_data;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != width) {
      ++dataset.rows_dropped;
      continue;
    }
    bool bad = false;
    std::size_t out_c = 0;
    for (std::size_t c = 0; c < width && !bad; ++c) {
      if (c == label_idx) continue;
      const std::string cell = trim(row[c]);
      if (cell.empty()) {
        bad = true;
        break;
      }
      if (numeric[c]) {
        double value;
        if (!parse_finite_double(cell, value)) {
          bad = true;
          break;
        }
        row_buffer[out_c] = value;
      } else {
        auto& codes = dataset.categorical_codes[header[c]];
        const auto [it, inserted] =
            codes.try_emplace(cell, static_cast<int>(codes.size()));
        row_buffer[out_c] = static_cast<double>(it->second);
      }
      ++out_c;
    }
    const std::string label = trim(row[label_idx]);
    if (bad || label.empty()) {
      ++dataset.rows_dropped;
      continue;
    }
    const auto [it, inserted] =
        class_index.try_emplace(label, static_cast<int>(class_index.size()));
    if (inserted) dataset.class_names.push_back(label);
    dataset.labels.push_back(it->second);
    feature_data.insert(feature_data.end(), row_buffer.begin(), row_buffer.end());
  }

  if (dataset.labels.empty()) {
    return make_error(Errc::empty_after_cleaning,
                      "all data rows were dropped from " + csv_path);
  }
  dataset.features.rows = dataset.labels.size();
  dataset.features.cols = dataset.feature_names.size();
  dataset.features.data = std::move(feature_data);
  return dataset;
}

Dataset synth_dataset(std::size_t n, std::size_t d, std::size_t class_count,
                      double separation, std::uint64_t seed) {
  assert(n >= class_count && class_count >= 1 && d >= 1);
  assert(separation >= 0.0);

  Rng rng(seed);
  std::vector<double> proportions;
  if (class_count == 3) {
    proportions.assign(std::begin(kThreeClassProportions),
                       std::end(kThreeClassProportions));
  } else {
    proportions.assign(class_count, 1.0 / static_cast<double>(class_count));
  }
  std::vector<std::size_t> counts = apportion(n, proportions);
  for (std::size_t c = 0; c < class_count; ++c) {
    // Every class keeps at least one row.
    if (counts[c] == 0) {
      const auto big = static_cast<std::size_t>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      --counts[big];
      counts[c] = 1;
    }
  }

  // Centroids on scaled basis vectors while they last, random directions
  // afterwards.
  Matrix centroids(class_count, d, 0.0);
  for (std::size_t c = 0; c < class_count; ++c) {
    if (c < d) {
      centroids.at(c, c) = separation;
    } else {
      double norm = 0.0;
      std::vector<double> direction(d);
      for (std::size_t j = 0; j < d; ++j) {
        direction[j] = rng.gaussian();
        norm += direction[j] * direction[j];
      }
      norm = std::sqrt(std::max(norm, 1e-12));
      for (std::size_t j = 0; j < d; ++j) {
        centroids.at(c, j) = separation * direction[j] / norm;
      }
    }
  }

  Dataset dataset;
  dataset.features = Matrix(n, d);
  dataset.labels.resize(n);
  if (class_count == 3) {
    dataset.class_names = {"LOL", "TFT", "VAL"};
  } else {
    for (std::size_t c = 0; c < class_count; ++c) {
      dataset.class_names.push_back("C" + std::to_string(c));
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    char name[24];
    std::snprintf(name, sizeof(name), "f%02zu", j);
    dataset.feature_names.push_back(name);
  }

  std::size_t row = 0;
  for (std::size_t c = 0; c < class_count; ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i, ++row) {
      dataset.labels[row] = static_cast<int>(c);
      for (std::size_t j = 0; j < d; ++j) {
        dataset.features.at(row, j) = centroids.at(c, j) + rng.gaussian();
      }
    }
  }

  // Deterministic row shuffle so class blocks do not survive into splits.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(dataset.labels[i], dataset.labels[j]);
    for (std::size_t col = 0; col < d; ++col) {
      std::swap(dataset.features.at(i, col), dataset.features.at(j, col));
    }
  }
  return dataset;
}

SplitIndices stratified_split(const Dataset& dataset, double test_fraction,
                              std::uint64_t seed) {
  assert(test_fraction > 0.0 && test_fraction < 1.0);
  Rng rng(seed);
  SplitIndices split;
  for (std::size_t c = 0; c < dataset.class_names.size(); ++c) {
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
      if (dataset.labels[i] == static_cast<int>(c)) indices.push_back(i);
    }
    if (indices.empty()) continue;
    for (std::size_t i = indices.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
      std::swap(indices[i], indices[j]);
    }
    std::size_t n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(indices.size())));
    if (indices.size() == 1) {
      n_test = 0;
    } else {
      n_test = std::clamp<std::size_t>(n_test, 1, indices.size() - 1);
    }
    split.test.insert(split.test.end(), indices.begin(), indices.begin() + n_test);
    split.train.insert(split.train.end(), indices.begin() + n_test, indices.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

SplitIndices shuffle_split(const Dataset& dataset, double test_fraction,
                           std::uint64_t seed) {
  assert(test_fraction > 0.0 && test_fraction < 1.0);
  if (dataset.size() < 2) {
    SplitIndices split;
    if (dataset.size() == 1) split.train.push_back(0);
    return split;
  }
  Rng rng(seed);
  std::vector<std::size_t> indices(dataset.size());
  std::iota(indices.begin(), indices.end(), 0);
  for (std::size_t i = indices.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(indices[i], indices[j]);
  }
  std::size_t n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(indices.size())));
  n_test = std::clamp<std::size_t>(n_test, 1, indices.size() - 1);
  SplitIndices split;
  split.test.assign(indices.begin(), indices.begin() + n_test);
  split.train.assign(indices.begin() + n_test, indices.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Dataset subset(const Dataset& dataset, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.class_names = dataset.class_names;
  out.feature_names = dataset.feature_names;
  out.features = Matrix(indices.size(), dataset.dim());
  out.labels.reserve(indices.size());
  for (std::size_t row = 0; row < indices.size(); ++row) {
    const std::size_t src = indices[row];
    assert(src < dataset.size());
    out.labels.push_back(dataset.labels[src]);
    for (std::size_t c = 0; c < dataset.dim(); ++c) {
      out.features.at(row, c) = dataset.features.at(src, c);
    }
  }
  return out;
}

}  // namespace gtpulse

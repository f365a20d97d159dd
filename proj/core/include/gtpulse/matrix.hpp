#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace gtpulse {

// Dense row-major matrix of doubles; row count may be zero.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) {
    assert(r < rows && c < cols);
    return data[r * cols + c];
  }
  double at(std::size_t r, std::size_t c) const {
    assert(r < rows && c < cols);
    return data[r * cols + c];
  }

  const double* row(std::size_t r) const {
    assert(r < rows);
    return data.data() + r * cols;
  }
  double* row(std::size_t r) {
    assert(r < rows);
    return data.data() + r * cols;
  }

  bool operator==(const Matrix&) const = default;
};

}  // namespace gtpulse

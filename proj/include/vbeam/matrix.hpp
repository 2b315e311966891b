// Copyright 2026 The vbeam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VBEAM_MATRIX_HPP
#define VBEAM_MATRIX_HPP

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vbeam {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Dense row-major matrix of log-domain scores. Entries are finite or
/// exactly -inf (the mask sentinel); NaN is a hard error in debug builds.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;

  ScoreMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  static ScoreMatrix from_values(std::size_t rows, std::size_t cols,
                                 std::vector<double> values) {
    if (values.size() != rows * cols) {
      throw std::invalid_argument(
          "ScoreMatrix: value count " + std::to_string(values.size()) +
          " does not match shape " + std::to_string(rows) + "x" +
          std::to_string(cols));
    }
    ScoreMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.values_ = std::move(values);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return values_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    assert(r < rows_);
    return {values_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    assert(r < rows_);
    return {values_.data() + r * cols_, cols_};
  }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  const std::vector<double>& values() const { return values_; }
  /// Moves the flat buffer out; the matrix is left empty.
  std::vector<double> take_values() {
    rows_ = 0;
    cols_ = 0;
    return std::move(values_);
  }

  bool same_shape(const ScoreMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  void fill(double v) { values_.assign(values_.size(), v); }

  /// Debug helper: every entry must be finite or exactly -inf.
  bool all_finite_or_neg_inf() const {
    for (double v : values_) {
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
        return false;
      }
    }
    return true;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Row-major matrix of non-negative indices (pruning index tensors).
struct IndexMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> values;

  IndexMatrix() = default;
  IndexMatrix(std::size_t r, std::size_t c, std::int32_t fill = 0)
      : rows(r), cols(c), values(r * c, fill) {}

  std::int32_t& operator()(std::size_t r, std::size_t c) {
    assert(r < rows && c < cols);
    return values[r * cols + c];
  }
  std::int32_t operator()(std::size_t r, std::size_t c) const {
    assert(r < rows && c < cols);
    return values[r * cols + c];
  }
  std::span<const std::int32_t> row(std::size_t r) const {
    assert(r < rows);
    return {values.data() + r * cols, cols};
  }
};

/// Row-major boolean mask with the same shape conventions as ScoreMatrix.
struct BoolMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> values;

  BoolMatrix() = default;
  BoolMatrix(std::size_t r, std::size_t c, bool fill = false)
      : rows(r), cols(c), values(r * c, fill ? 1 : 0) {}

  std::uint8_t& operator()(std::size_t r, std::size_t c) {
    assert(r < rows && c < cols);
    return values[r * cols + c];
  }
  bool operator()(std::size_t r, std::size_t c) const {
    assert(r < rows && c < cols);
    return values[r * cols + c] != 0;
  }
};

}  // namespace vbeam

#endif  // VBEAM_MATRIX_HPP

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

#ifndef VBEAM_TENSOR_OPS_HPP
#define VBEAM_TENSOR_OPS_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vbeam/matrix.hpp"

namespace vbeam {

struct TopK {
  ScoreMatrix values;   // [rows, k], descending per row
  IndexMatrix indices;  // [rows, k], column positions of the values
};

namespace detail {

// Strict total order used by every pruning selection: larger value first,
// ties resolved toward the lower column index.
inline bool topk_before(double va, std::int32_t ia, double vb,
                        std::int32_t ib) {
  if (va != vb) return va > vb;
  return ia < ib;
}

}  // namespace detail

/// Per-row selection of the k largest entries and their column indices.
/// Partial selection with a sorted prefix; ties go to the lowest index so
/// that every engine sees the same survivors.
inline TopK topk_rows(const ScoreMatrix& m, std::size_t k) {
  if (k < 1 || k > m.cols()) {
    throw std::invalid_argument("topk_rows: k=" + std::to_string(k) +
                                " out of range for " +
                                std::to_string(m.cols()) + " columns");
  }
  assert(m.all_finite_or_neg_inf());
  TopK out;
  out.values = ScoreMatrix(m.rows(), k);
  out.indices = IndexMatrix(m.rows(), k);
  const std::size_t n = m.cols();
  std::vector<std::int32_t> order(n);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::span<const double> row = m.row(r);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&row](std::int32_t a, std::int32_t b) {
                        return detail::topk_before(row[a], a, row[b], b);
                      });
    for (std::size_t j = 0; j < k; ++j) {
      out.values(r, j) = row[order[j]];
      out.indices(r, j) = order[j];
    }
  }
  return out;
}

/// Duplicates a column vector (or flat vector) into k identical columns.
inline ScoreMatrix replicate_rows(std::span<const double> v, std::size_t k) {
  if (k < 1) {
    throw std::invalid_argument("replicate_rows: k must be >= 1");
  }
  ScoreMatrix out(v.size(), k);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::span<double> row = out.row(i);
    std::fill(row.begin(), row.end(), v[i]);
  }
  return out;
}

inline ScoreMatrix replicate_rows(const ScoreMatrix& v, std::size_t k) {
  if (v.cols() != 1) {
    throw std::invalid_argument("replicate_rows: input must be [n,1]");
  }
  return replicate_rows(std::span<const double>(v.data(), v.rows()), k);
}

/// Row-major reinterpretation of the flat buffer; the values never move.
inline ScoreMatrix reshape(ScoreMatrix m, std::size_t new_rows,
                           std::size_t new_cols) {
  if (new_rows * new_cols != m.rows() * m.cols()) {
    throw std::invalid_argument(
        "reshape: cannot view " + std::to_string(m.rows()) + "x" +
        std::to_string(m.cols()) + " as " + std::to_string(new_rows) + "x" +
        std::to_string(new_cols));
  }
  return ScoreMatrix::from_values(new_rows, new_cols, m.take_values());
}

/// Output row j is a copy of input row idx[j]; repeated indices copy.
inline ScoreMatrix gather_rows(const ScoreMatrix& state,
                               std::span<const std::int32_t> idx) {
  ScoreMatrix out(idx.size(), state.cols());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] < 0 || static_cast<std::size_t>(idx[j]) >= state.rows()) {
      throw std::invalid_argument("gather_rows: index " +
                                  std::to_string(idx[j]) +
                                  " out of range for " +
                                  std::to_string(state.rows()) + " rows");
    }
    std::span<const double> src = state.row(idx[j]);
    std::copy(src.begin(), src.end(), out.row(j).begin());
  }
  return out;
}

/// log(exp(a) + exp(b)) without leaving the log domain.
inline double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

/// log sum exp with max-shift; the post-shift sum is strictly
/// left-to-right so results do not depend on execution strategy.
inline double logsumexp(std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("logsumexp: empty input");
  }
  double m = values[0];
  for (double v : values) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

/// Entries where the mask is true become `fill`; everything else copies.
inline ScoreMatrix masked_fill(const ScoreMatrix& m, const BoolMatrix& mask,
                               double fill) {
  if (mask.rows != m.rows() || mask.cols != m.cols()) {
    throw std::invalid_argument("masked_fill: shape mismatch");
  }
  ScoreMatrix out = m;
  double* v = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask.values[i]) v[i] = fill;
  }
  return out;
}

}  // namespace vbeam

#endif  // VBEAM_TENSOR_OPS_HPP

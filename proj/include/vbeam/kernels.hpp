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

#ifndef VBEAM_KERNELS_HPP
#define VBEAM_KERNELS_HPP

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>

#include "vbeam/matrix.hpp"
#include "vbeam/tensor_ops.hpp"

namespace vbeam {

// Two kernel families live here. The `seq_` family is the plain
// one-accumulator arithmetic a conventional per-hypothesis loop performs;
// the scalar reference engine is built on it. The `batch_` family walks
// contiguous row blocks with the accumulation order chosen so the inner
// loops vectorize; the batched engine is built on it. Both families use
// the same scalar exp/log/tanh, and per-row results agree to a few ulp.

// ---------------------------------------------------------------------------
// Sequential kernels (conventional engine)

inline double seq_dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

/// out = W x + bias, W row-major [out_dim, in_dim].
inline void seq_affine(const ScoreMatrix& w, std::span<const double> bias,
                       std::span<const double> x, std::span<double> out) {
  assert(w.cols() == x.size() && w.rows() == out.size());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    out[r] = bias.empty() ? 0.0 : bias[r];
    out[r] += seq_dot(w.row(r), x);
  }
}

// ---------------------------------------------------------------------------
// Batched kernels (vectorized engine)

/// out[rows, out_dim] = X[rows, in_dim] * W^T + bias, W row-major
/// [out_dim, in_dim], applied to rows [row_begin, row_end). Accumulates
/// k-outer over independent output lanes so the j-loop vectorizes without
/// reassociating any single dot product.
inline void batch_affine(const ScoreMatrix& w, std::span<const double> bias,
                         const ScoreMatrix& x, ScoreMatrix& out,
                         std::size_t row_begin, std::size_t row_end) {
  assert(w.cols() == x.cols() && out.rows() >= row_end &&
         out.cols() == w.rows() && row_end <= x.rows());
  const std::size_t in_dim = w.cols();
  const std::size_t out_dim = w.rows();
  for (std::size_t r = row_begin; r < row_end; ++r) {
    const double* xr = x.row(r).data();
    double* o = out.row(r).data();
    if (bias.empty()) {
      for (std::size_t j = 0; j < out_dim; ++j) o[j] = 0.0;
    } else {
      for (std::size_t j = 0; j < out_dim; ++j) o[j] = bias[j];
    }
    // W is walked column-block-wise per input element: o[j] += xk * W[j][k]
    // would stride badly, so accumulate four k at a time per output lane.
    std::size_t k = 0;
    for (; k + 4 <= in_dim; k += 4) {
      const double x0 = xr[k], x1 = xr[k + 1], x2 = xr[k + 2], x3 = xr[k + 3];
      const double* w0 = w.data() + k;
      for (std::size_t j = 0; j < out_dim; ++j) {
        const double* wj = w0 + j * in_dim;
        o[j] += x0 * wj[0] + x1 * wj[1] + x2 * wj[2] + x3 * wj[3];
      }
    }
    for (; k < in_dim; ++k) {
      const double xk = xr[k];
      for (std::size_t j = 0; j < out_dim; ++j) {
        o[j] += xk * w(j, k);
      }
    }
  }
}

inline void batch_affine(const ScoreMatrix& w, std::span<const double> bias,
                         const ScoreMatrix& x, ScoreMatrix& out) {
  batch_affine(w, bias, x, out, 0, x.rows());
}

/// Accumulating variant: out[r, :] += X[r, :] * W^T (no bias reset).
inline void batch_affine_add(const ScoreMatrix& w, const ScoreMatrix& x,
                             ScoreMatrix& out, std::size_t row_begin,
                             std::size_t row_end) {
  assert(w.cols() == x.cols() && out.cols() == w.rows() &&
         row_end <= x.rows());
  const std::size_t in_dim = w.cols();
  const std::size_t out_dim = w.rows();
  for (std::size_t r = row_begin; r < row_end; ++r) {
    const double* xr = x.row(r).data();
    double* o = out.row(r).data();
    std::size_t k = 0;
    for (; k + 4 <= in_dim; k += 4) {
      const double x0 = xr[k], x1 = xr[k + 1], x2 = xr[k + 2], x3 = xr[k + 3];
      const double* w0 = w.data() + k;
      for (std::size_t j = 0; j < out_dim; ++j) {
        const double* wj = w0 + j * in_dim;
        o[j] += x0 * wj[0] + x1 * wj[1] + x2 * wj[2] + x3 * wj[3];
      }
    }
    for (; k < in_dim; ++k) {
      const double xk = xr[k];
      for (std::size_t j = 0; j < out_dim; ++j) {
        o[j] += xk * w(j, k);
      }
    }
  }
}

inline void batch_affine_add(const ScoreMatrix& w, const ScoreMatrix& x,
                             ScoreMatrix& out) {
  batch_affine_add(w, x, out, 0, x.rows());
}

/// Calls fn(begin, end) for every maximal run of rows with flag != 0.
/// An empty flag span counts as all-active.
template <typename Fn>
inline void for_each_active_run(std::span<const std::uint8_t> flags,
                                std::size_t n, Fn&& fn) {
  if (flags.empty()) {
    if (n > 0) fn(std::size_t{0}, n);
    return;
  }
  std::size_t i = 0;
  while (i < n) {
    while (i < n && !flags[i]) ++i;
    std::size_t begin = i;
    while (i < n && flags[i]) ++i;
    if (i > begin) fn(begin, i);
  }
}

// ---------------------------------------------------------------------------
// Shared element-wise pieces

inline void tanh_inplace(std::span<double> v) {
  for (double& x : v) x = std::tanh(x);
}

/// Turns raw logits into a log-normalized row: x - logsumexp(x).
inline void log_softmax_inplace(std::span<double> row) {
  const double lse = logsumexp(row);
  for (double& x : row) x -= lse;
}

/// Softmax over the first `valid` entries; the rest are set to exactly 0.
/// Returns via `out`, which may alias `energies`.
inline void masked_softmax(std::span<const double> energies, std::size_t valid,
                           std::span<double> out) {
  assert(valid >= 1 && valid <= energies.size() &&
         energies.size() == out.size());
  double m = energies[0];
  for (std::size_t t = 1; t < valid; ++t) m = std::max(m, energies[t]);
  double sum = 0.0;
  for (std::size_t t = 0; t < valid; ++t) {
    out[t] = std::exp(energies[t] - m);
    sum += out[t];
  }
  const double inv = 1.0 / sum;
  for (std::size_t t = 0; t < valid; ++t) out[t] *= inv;
  for (std::size_t t = valid; t < out.size(); ++t) out[t] = 0.0;
}

}  // namespace vbeam

#endif  // VBEAM_KERNELS_HPP

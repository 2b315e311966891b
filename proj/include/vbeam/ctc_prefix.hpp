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

#ifndef VBEAM_CTC_PREFIX_HPP
#define VBEAM_CTC_PREFIX_HPP

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vbeam/encoder.hpp"
#include "vbeam/matrix.hpp"
#include "vbeam/tensor_ops.hpp"
#include "vbeam/vocab.hpp"

namespace vbeam {

// CTC prefix scoring. For a prefix g and frame posteriors p(k|t), the
// forward masses over frames 1..T are
//
//   phi(t)        = gamma_b[t-1](g) + [c != last(g)] * gamma_n[t-1](g)
//   gamma_n[t](h) = p(c|t) * (gamma_n[t-1](h) + phi(t))        h = g.c
//   gamma_b[t](h) = p(blank|t) * (gamma_b[t-1](h) + gamma_n[t-1](h))
//   psi(h)        = sum_t p(c|t) * phi(t)
//
// all carried in the log domain. psi(h) is the probability that the
// collapsed output (remove repeats, then blanks) begins with h. Extending
// by eos closes the prefix instead:
// psi(g.eos) = gamma_n[T](g) + gamma_b[T](g), the probability that the
// output is exactly g.

inline constexpr Label kEmptyPrefix = -1;

/// Per-hypothesis CTC scorer state. Arrays are frame-indexed (entry t holds
/// the mass after consuming frames 0..t); entries at padded frames stay -inf.
struct CtcPrefixState {
  std::vector<double> gamma_n;  // ending in non-blank
  std::vector<double> gamma_b;  // ending in blank
  Label last_label = kEmptyPrefix;
  double prefix_score = 0.0;  // log psi(g); 0 for the empty prefix

  bool empty() const { return last_label == kEmptyPrefix; }
};

/// Borrowed view of one prefix state; lets the batched path score straight
/// from flat rows without copying.
struct CtcPrefixView {
  std::span<const double> gamma_n;
  std::span<const double> gamma_b;
  Label last_label = kEmptyPrefix;
  double prefix_score = 0.0;

  CtcPrefixView() = default;
  CtcPrefixView(std::span<const double> gn, std::span<const double> gb,
                Label last, double score)
      : gamma_n(gn), gamma_b(gb), last_label(last), prefix_score(score) {}
  explicit CtcPrefixView(const CtcPrefixState& s)
      : gamma_n(s.gamma_n),
        gamma_b(s.gamma_b),
        last_label(s.last_label),
        prefix_score(s.prefix_score) {}

  bool empty() const { return last_label == kEmptyPrefix; }
};

/// State of the empty prefix: gamma_n uniformly -inf, gamma_b the running
/// cumulative blank log-mass.
inline CtcPrefixState init_ctc_state(const EncoderOutput& enc) {
  const std::size_t t_max = enc.ctc_logprobs.rows();
  const std::size_t blank = enc.ctc_logprobs.cols() - 1;
  CtcPrefixState s;
  s.gamma_n.assign(t_max, kNegInf);
  s.gamma_b.assign(t_max, kNegInf);
  double acc = 0.0;
  for (std::size_t t = 0; t < enc.frames; ++t) {
    acc += enc.ctc_logprobs(t, blank);
    s.gamma_b[t] = acc;
  }
  return s;
}

namespace ctc_detail {

inline void check_candidate(Label c, std::int32_t num_labels) {
  if (c < 0 || c >= num_labels) {
    throw std::invalid_argument("ctc prefix: candidate label " +
                                std::to_string(c) + " outside L");
  }
}

/// Core extension of one prefix by one regular label. `shared_phi_diff` may
/// carry the parent's precomputed phi for c != last(g); pass nullptr to
/// derive phi in place. Returns log psi(g.c).
inline double extend_regular(const EncoderOutput& enc, const CtcPrefixView& g,
                             Label c, const double* shared_phi_diff,
                             std::span<double> new_n, std::span<double> new_b,
                             std::span<double> contrib) {
  const std::size_t frames = enc.frames;
  const std::size_t blank = enc.ctc_logprobs.cols() - 1;
  const bool same = (c == g.last_label);
  double prev_new_n = kNegInf;
  double prev_new_b = kNegInf;
  for (std::size_t f = 0; f < frames; ++f) {
    const double prev_gb =
        (f == 0) ? (g.empty() ? 0.0 : kNegInf) : g.gamma_b[f - 1];
    double phi;
    if (same) {
      phi = prev_gb;
    } else if (shared_phi_diff != nullptr) {
      phi = shared_phi_diff[f];
    } else {
      const double prev_gn = (f == 0) ? kNegInf : g.gamma_n[f - 1];
      phi = logaddexp(prev_gb, prev_gn);
    }
    const double p_c = enc.ctc_logprobs(f, static_cast<std::size_t>(c));
    contrib[f] = p_c + phi;
    const double n_next = p_c + logaddexp(prev_new_n, phi);
    const double b_next =
        enc.ctc_logprobs(f, blank) + logaddexp(prev_new_b, prev_new_n);
    new_n[f] = n_next;
    new_b[f] = b_next;
    prev_new_n = n_next;
    prev_new_b = b_next;
  }
  return logsumexp(contrib.subspan(0, frames));
}

/// phi for candidates that differ from last(g); shared per parent.
inline void fill_phi_diff(const EncoderOutput& enc, const CtcPrefixView& g,
                          std::span<double> phi) {
  for (std::size_t f = 0; f < enc.frames; ++f) {
    const double prev_gb =
        (f == 0) ? (g.empty() ? 0.0 : kNegInf) : g.gamma_b[f - 1];
    const double prev_gn = (f == 0) ? kNegInf : g.gamma_n[f - 1];
    phi[f] = logaddexp(prev_gb, prev_gn);
  }
}

}  // namespace ctc_detail

/// log psi(g.eos) - log psi(g): closing the prefix.
inline double ctc_eos_score(const EncoderOutput& enc, const CtcPrefixView& g) {
  double complete;
  if (g.empty()) {
    // Probability of the empty output: every valid frame blank.
    complete = enc.frames == 0 ? 0.0 : g.gamma_b[enc.frames - 1];
  } else {
    complete = logaddexp(g.gamma_n[enc.frames - 1], g.gamma_b[enc.frames - 1]);
  }
  return complete - g.prefix_score;
}

/// Single-slot extension, the conventional per-candidate path.
/// Returns log psi(g.c) - log psi(g) and the state of g.c.
inline std::pair<double, CtcPrefixState> ctc_prefix_score_one(
    const EncoderOutput& enc, const CtcPrefixState& g, Label c, Label eos_id) {
  const std::int32_t num_labels =
      static_cast<std::int32_t>(enc.ctc_logprobs.cols()) - 1;
  ctc_detail::check_candidate(c, num_labels);
  const std::size_t t_max = enc.ctc_logprobs.rows();
  const CtcPrefixView gv(g);
  CtcPrefixState out;
  out.last_label = c;
  out.gamma_n.assign(t_max, kNegInf);
  out.gamma_b.assign(t_max, kNegInf);
  if (c == eos_id) {
    const double delta = ctc_eos_score(enc, gv);
    out.prefix_score = g.prefix_score + delta;
    return {delta, std::move(out)};
  }
  std::vector<double> contrib(enc.frames);
  const double psi = ctc_detail::extend_regular(enc, gv, c, nullptr,
                                                out.gamma_n, out.gamma_b,
                                                contrib);
  out.prefix_score = psi;
  return {psi - g.prefix_score, std::move(out)};
}

/// Flat batch of CTC scorer states, one row per slot.
struct CtcStateBatch {
  ScoreMatrix gamma_n;               // [n, T_max]
  ScoreMatrix gamma_b;               // [n, T_max]
  std::vector<Label> last_label;     // [n]
  std::vector<double> prefix_score;  // [n]

  void resize(std::size_t n, std::size_t t_max) {
    gamma_n = ScoreMatrix(n, t_max, kNegInf);
    gamma_b = ScoreMatrix(n, t_max, kNegInf);
    last_label.assign(n, kEmptyPrefix);
    prefix_score.assign(n, 0.0);
  }
  std::size_t slots() const { return last_label.size(); }

  CtcPrefixView view(std::size_t i) const {
    return {gamma_n.row(i), gamma_b.row(i), last_label[i], prefix_score[i]};
  }

  void set(std::size_t i, const CtcPrefixState& s) {
    std::copy(s.gamma_n.begin(), s.gamma_n.end(), gamma_n.row(i).begin());
    std::copy(s.gamma_b.begin(), s.gamma_b.end(), gamma_b.row(i).begin());
    last_label[i] = s.last_label;
    prefix_score[i] = s.prefix_score;
  }
};

struct CtcWorkspace {
  std::vector<double> phi;      // [T_max]
  std::vector<double> contrib;  // [T_max]
  void resize(std::size_t t_max) {
    phi.resize(t_max);
    contrib.resize(t_max);
  }
};

/// Batched delta scores for the locally surviving candidates. Slot i with
/// candidate j writes delta(i, j) and candidate state row i*K + j. phi is
/// computed once per parent and shared across its candidates, so results
/// stay bit-identical to ctc_prefix_score_one. Inactive slots are skipped.
inline void ctc_prefix_score_batch(
    std::span<const EncoderOutput* const> enc_per_slot,
    const CtcStateBatch& states, const IndexMatrix& candidates, Label eos_id,
    std::span<const std::uint8_t> active, ScoreMatrix& delta_out,
    CtcStateBatch& cand_states_out, CtcWorkspace& ws) {
  const std::size_t n = states.slots();
  const std::size_t k = candidates.cols;
  if (candidates.rows != n || enc_per_slot.size() != n ||
      (!active.empty() && active.size() != n)) {
    throw std::invalid_argument("ctc_prefix_score_batch: slot count mismatch");
  }
  if (delta_out.rows() != n || delta_out.cols() != k ||
      cand_states_out.slots() != n * k) {
    throw std::invalid_argument("ctc_prefix_score_batch: bad output shapes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!active.empty() && !active[i]) continue;
    const EncoderOutput& enc = *enc_per_slot[i];
    const std::int32_t num_labels =
        static_cast<std::int32_t>(enc.ctc_logprobs.cols()) - 1;
    const CtcPrefixView g = states.view(i);
    ctc_detail::fill_phi_diff(enc, g, ws.phi);
    for (std::size_t j = 0; j < k; ++j) {
      const Label c = candidates(i, j);
      ctc_detail::check_candidate(c, num_labels);
      const std::size_t row = i * k + j;
      std::span<double> nn = cand_states_out.gamma_n.row(row);
      std::span<double> nb = cand_states_out.gamma_b.row(row);
      std::fill(nn.begin(), nn.end(), kNegInf);
      std::fill(nb.begin(), nb.end(), kNegInf);
      cand_states_out.last_label[row] = c;
      if (c == eos_id) {
        const double d = ctc_eos_score(enc, g);
        delta_out(i, j) = d;
        cand_states_out.prefix_score[row] = g.prefix_score + d;
        continue;
      }
      const double psi = ctc_detail::extend_regular(
          enc, g, c, (c == g.last_label) ? nullptr : ws.phi.data(), nn, nb,
          ws.contrib);
      cand_states_out.prefix_score[row] = psi;
      delta_out(i, j) = psi - g.prefix_score;
    }
  }
}

}  // namespace vbeam

#endif  // VBEAM_CTC_PREFIX_HPP

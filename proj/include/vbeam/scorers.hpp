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

#ifndef VBEAM_SCORERS_HPP
#define VBEAM_SCORERS_HPP

#include <cassert>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vbeam/ctc_prefix.hpp"
#include "vbeam/encoder.hpp"
#include "vbeam/kernels.hpp"
#include "vbeam/matrix.hpp"
#include "vbeam/synth_model.hpp"
#include "vbeam/tensor_ops.hpp"
#include "vbeam/vocab.hpp"

namespace vbeam {

// ---------------------------------------------------------------------------
// Shallow fusion

struct FusionWeights {
  double ctc_weight = 0.3;  // lambda
  double lm_weight = 0.3;   // kappa

  void validate() const {
    if (!(ctc_weight >= 0.0 && ctc_weight <= 1.0)) {
      throw std::invalid_argument("FusionWeights: ctc weight must be in [0,1]");
    }
    if (!(lm_weight >= 0.0)) {
      throw std::invalid_argument("FusionWeights: lm weight must be >= 0");
    }
  }
};

/// lambda*ctc + (1-lambda)*att + kappa*lm, in that order. Zero-weight terms
/// contribute exactly 0 even against a -inf score.
inline double fuse_one(double att, double ctc, double lm,
                       const FusionWeights& w) {
  double v = 0.0;
  if (w.ctc_weight != 0.0) v += w.ctc_weight * ctc;
  v += (1.0 - w.ctc_weight) * att;
  if (w.lm_weight != 0.0) v += w.lm_weight * lm;
  return v;
}

inline ScoreMatrix fuse_scores(const ScoreMatrix& att, const ScoreMatrix& ctc,
                               const ScoreMatrix& lm, const FusionWeights& w) {
  if (!att.same_shape(ctc) || !att.same_shape(lm)) {
    throw std::invalid_argument("fuse_scores: shape mismatch");
  }
  w.validate();
  ScoreMatrix out(att.rows(), att.cols());
  const double* a = att.data();
  const double* c = ctc.data();
  const double* l = lm.data();
  double* o = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    o[i] = fuse_one(a[i], c[i], l[i], w);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Attention decoder
//
// One scoring call folds the previously selected label into the recurrent
// state, attends, and generates:
//   r'       = tanh(dec_rr r + dec_rc c + dec_emb[last] + dec_rb)
//   e_t      = <att_proj r', hidden_t>      over valid frames
//   a'       = softmax(e),  exactly 0 on padding
//   c'       = sum_t a'_t hidden_t
//   gamma    = log_softmax(gen_w [r'; c'] + gen_b)
// so the state set carried per hypothesis is {r, c, attention weights}.

struct AttDecoderState {
  std::vector<double> r;            // [d_dec]
  std::vector<double> c;            // [d_enc]
  std::vector<double> att_weights;  // [T_max], valid entries sum to 1
};

struct LMState {
  std::vector<double> h;  // [d_lm]
};

/// Fresh decoder state: zero vectors, uniform attention over valid frames.
inline AttDecoderState init_att_state(const SyntheticModel& model,
                                      const EncoderOutput& enc) {
  AttDecoderState s;
  s.r.assign(model.spec.d_dec, 0.0);
  s.c.assign(model.spec.d_enc, 0.0);
  s.att_weights.assign(enc.hidden.rows(), 0.0);
  const double u = 1.0 / static_cast<double>(enc.frames);
  for (std::size_t t = 0; t < enc.frames; ++t) s.att_weights[t] = u;
  return s;
}

inline LMState init_lm_state(const SyntheticModel& model) {
  return LMState{std::vector<double>(model.spec.d_lm, 0.0)};
}

namespace scorer_detail {

inline void check_label(Label l, std::int32_t vocab_size) {
  if (l < 0 || l >= vocab_size) {
    throw std::invalid_argument("scorer: label " + std::to_string(l) +
                                " outside L");
  }
}

}  // namespace scorer_detail

/// Conventional single-hypothesis attention step (sequential kernels).
/// Returns the log-normalized row over L and the successor state.
inline std::pair<std::vector<double>, AttDecoderState> att_score_one(
    const SyntheticModel& model, const EncoderOutput& enc,
    const AttDecoderState& state, Label last_label) {
  scorer_detail::check_label(last_label, model.spec.vocab_size);
  const std::size_t d_dec = model.spec.d_dec;
  const std::size_t d_enc = model.spec.d_enc;
  const std::size_t vocab = model.spec.vocab_size;

  AttDecoderState next;
  next.r.resize(d_dec);
  // Recurrency: fold the chosen label and the previous context into r.
  seq_affine(model.dec_rr, model.dec_rb, state.r, next.r);
  std::span<const double> emb = model.dec_emb.row(last_label);
  for (std::size_t j = 0; j < d_dec; ++j) {
    next.r[j] += seq_dot(model.dec_rc.row(j), state.c) + emb[j];
  }
  tanh_inplace(next.r);

  // Dot-product attention between a projection of r and the encoder rows.
  std::vector<double> proj(d_enc);
  seq_affine(model.att_proj, {}, next.r, proj);
  std::vector<double> energies(enc.frames);
  for (std::size_t t = 0; t < enc.frames; ++t) {
    energies[t] = seq_dot(proj, enc.hidden.row(t).subspan(0, d_enc));
  }
  next.att_weights.assign(enc.hidden.rows(), 0.0);
  masked_softmax(energies, enc.frames,
                 std::span<double>(next.att_weights.data(), enc.frames));

  next.c.assign(d_enc, 0.0);
  for (std::size_t t = 0; t < enc.frames; ++t) {
    const double a = next.att_weights[t];
    std::span<const double> h = enc.hidden.row(t);
    for (std::size_t k = 0; k < d_enc; ++k) next.c[k] += a * h[k];
  }

  // Generate: affine map of [r; c] through a log-softmax over L.
  std::vector<double> gamma(vocab);
  for (std::size_t j = 0; j < vocab; ++j) {
    std::span<const double> wj = model.gen_w.row(j);
    gamma[j] = model.gen_b[j] + seq_dot(wj.subspan(0, d_dec), next.r) +
               seq_dot(wj.subspan(d_dec, d_enc), next.c);
  }
  log_softmax_inplace(gamma);
  return {std::move(gamma), std::move(next)};
}

/// Conventional single-hypothesis LM step.
inline std::pair<std::vector<double>, LMState> lm_score_one(
    const SyntheticModel& model, const LMState& state, Label last_label) {
  scorer_detail::check_label(last_label, model.spec.vocab_size);
  const std::size_t d_lm = model.spec.d_lm;
  const std::size_t vocab = model.spec.vocab_size;
  LMState next;
  next.h.resize(d_lm);
  seq_affine(model.lm_hh, model.lm_hb, state.h, next.h);
  std::span<const double> emb = model.lm_emb.row(last_label);
  for (std::size_t j = 0; j < d_lm; ++j) next.h[j] += emb[j];
  tanh_inplace(next.h);

  std::vector<double> logp(vocab);
  seq_affine(model.lm_out, model.lm_ob, next.h, logp);
  log_softmax_inplace(logp);
  return {std::move(logp), std::move(next)};
}

// ---------------------------------------------------------------------------
// Flat state batches (one row per hypothesis slot)

struct AttStateBatch {
  ScoreMatrix r;            // [n, d_dec]
  ScoreMatrix c;            // [n, d_enc]
  ScoreMatrix att_weights;  // [n, T_max]

  void resize(std::size_t n, std::size_t d_dec, std::size_t d_enc,
              std::size_t t_max) {
    r = ScoreMatrix(n, d_dec, 0.0);
    c = ScoreMatrix(n, d_enc, 0.0);
    att_weights = ScoreMatrix(n, t_max, 0.0);
  }
  std::size_t slots() const { return r.rows(); }
};

struct LmStateBatch {
  ScoreMatrix h;  // [n, d_lm]

  void resize(std::size_t n, std::size_t d_lm) {
    h = ScoreMatrix(n, d_lm, 0.0);
  }
  std::size_t slots() const { return h.rows(); }
};

struct ScorerWorkspace {
  ScoreMatrix rc_concat;  // [n, d_dec + d_enc]
  CtcWorkspace ctc;

  void resize(std::size_t n, std::size_t d_dec, std::size_t d_enc,
              std::size_t t_max) {
    rc_concat = ScoreMatrix(n, d_dec + d_enc, 0.0);
    ctc.resize(t_max);
  }
};

/// Batched attention step over all slots; rows whose active flag is unset
/// are skipped and their outputs left untouched. Per-row results agree with
/// att_score_one to a few ulp (the batched kernels accumulate over rows in
/// vector lanes).
inline void att_score_batch(const SyntheticModel& model,
                            std::span<const EncoderOutput* const> enc_per_slot,
                            const AttStateBatch& in,
                            std::span<const Label> last_labels,
                            std::span<const std::uint8_t> active,
                            AttStateBatch& out, ScoreMatrix& gamma,
                            ScorerWorkspace& ws) {
  const std::size_t n = in.slots();
  if (last_labels.size() != n || enc_per_slot.size() != n ||
      (!active.empty() && active.size() != n)) {
    throw std::invalid_argument("att_score_batch: slot count mismatch");
  }
  assert(out.slots() == n && gamma.rows() == n &&
         gamma.cols() == static_cast<std::size_t>(model.spec.vocab_size));
  const std::size_t d_dec = model.spec.d_dec;
  const std::size_t d_enc = model.spec.d_enc;

  for_each_active_run(active, n, [&](std::size_t b, std::size_t e) {
    // Recurrency for the whole run.
    batch_affine(model.dec_rr, model.dec_rb, in.r, out.r, b, e);
    batch_affine_add(model.dec_rc, in.c, out.r, b, e);
    for (std::size_t i = b; i < e; ++i) {
      scorer_detail::check_label(last_labels[i], model.spec.vocab_size);
      std::span<const double> emb = model.dec_emb.row(last_labels[i]);
      std::span<double> r = out.r.row(i);
      for (std::size_t j = 0; j < d_dec; ++j) r[j] += emb[j];
      tanh_inplace(r);
    }

    // Attention and context per slot; the projection reuses the first
    // d_enc lanes of the concat staging buffer.
    for (std::size_t i = b; i < e; ++i) {
      const EncoderOutput& enc = *enc_per_slot[i];
      std::span<double> rc = ws.rc_concat.row(i);
      std::span<double> proj = rc.subspan(0, d_enc);
      seq_affine(model.att_proj, {}, out.r.row(i), proj);

      std::span<double> aw = out.att_weights.row(i);
      for (std::size_t t = 0; t < enc.frames; ++t) {
        aw[t] = seq_dot(proj, enc.hidden.row(t).subspan(0, d_enc));
      }
      masked_softmax(std::span<const double>(aw.data(), enc.frames),
                     enc.frames, aw.subspan(0, enc.frames));
      for (std::size_t t = enc.frames; t < aw.size(); ++t) aw[t] = 0.0;

      std::span<double> ctx = out.c.row(i);
      for (double& v : ctx) v = 0.0;
      for (std::size_t t = 0; t < enc.frames; ++t) {
        const double a = aw[t];
        std::span<const double> h = enc.hidden.row(t);
        for (std::size_t k = 0; k < d_enc; ++k) ctx[k] += a * h[k];
      }
    }

    // Generate over the run: stage [r; c] and push through one matmul.
    for (std::size_t i = b; i < e; ++i) {
      std::span<double> rc = ws.rc_concat.row(i);
      std::span<const double> r = out.r.row(i);
      std::span<const double> c = out.c.row(i);
      std::copy(r.begin(), r.end(), rc.begin());
      std::copy(c.begin(), c.end(), rc.begin() + d_dec);
    }
    batch_affine(model.gen_w, model.gen_b, ws.rc_concat, gamma, b, e);
    for (std::size_t i = b; i < e; ++i) {
      log_softmax_inplace(gamma.row(i));
    }
  });
}

/// Batched LM step; same conventions as att_score_batch.
inline void lm_score_batch(const SyntheticModel& model, const LmStateBatch& in,
                           std::span<const Label> last_labels,
                           std::span<const std::uint8_t> active,
                           LmStateBatch& out, ScoreMatrix& logp) {
  const std::size_t n = in.slots();
  if (last_labels.size() != n || (!active.empty() && active.size() != n)) {
    throw std::invalid_argument("lm_score_batch: slot count mismatch");
  }
  assert(out.slots() == n && logp.rows() == n &&
         logp.cols() == static_cast<std::size_t>(model.spec.vocab_size));
  const std::size_t d_lm = model.spec.d_lm;

  for_each_active_run(active, n, [&](std::size_t b, std::size_t e) {
    batch_affine(model.lm_hh, model.lm_hb, in.h, out.h, b, e);
    for (std::size_t i = b; i < e; ++i) {
      scorer_detail::check_label(last_labels[i], model.spec.vocab_size);
      std::span<const double> emb = model.lm_emb.row(last_labels[i]);
      std::span<double> h = out.h.row(i);
      for (std::size_t j = 0; j < d_lm; ++j) h[j] += emb[j];
      tanh_inplace(h);
    }
    batch_affine(model.lm_out, model.lm_ob, out.h, logp, b, e);
    for (std::size_t i = b; i < e; ++i) {
      log_softmax_inplace(logp.row(i));
    }
  });
}

// ---------------------------------------------------------------------------
// Combined scorer state for the batched engine

struct ScorerStateBatch {
  AttStateBatch att;
  LmStateBatch lm;
  CtcStateBatch ctc;

  std::size_t slots() const { return att.slots(); }
};

/// States for all S*B slots at t=0: every slot of an utterance holds the
/// same fresh state, and the accumulated-score vector starts at zero. The
/// encoder output is shared across the B hypothesis slots by reference
/// (the caller keeps one EncoderOutput pointer per slot).
inline ScorerStateBatch init_scorer_states(
    const SyntheticModel& model, std::span<const EncoderOutput> encs,
    std::size_t beam, bool with_ctc = true) {
  const std::size_t s_count = encs.size();
  const std::size_t n = s_count * beam;
  const std::size_t t_max = s_count == 0 ? 0 : encs[0].hidden.rows();
  ScorerStateBatch st;
  st.att.resize(n, model.spec.d_dec, model.spec.d_enc, t_max);
  st.lm.resize(n, model.spec.d_lm);
  st.ctc.resize(with_ctc ? n : 0, t_max);
  for (std::size_t s = 0; s < s_count; ++s) {
    const AttDecoderState att0 = init_att_state(model, encs[s]);
    const CtcPrefixState ctc0 =
        with_ctc ? init_ctc_state(encs[s]) : CtcPrefixState{};
    for (std::size_t b = 0; b < beam; ++b) {
      const std::size_t i = s * beam + b;
      std::copy(att0.att_weights.begin(), att0.att_weights.end(),
                st.att.att_weights.row(i).begin());
      if (with_ctc) st.ctc.set(i, ctc0);
      // r, c and the LM state are already zero.
    }
  }
  return st;
}

/// Q0: the accumulated scores of all S*B slots start at exactly zero.
inline std::vector<double> init_accumulated_scores(std::size_t s_count,
                                                   std::size_t beam) {
  return std::vector<double>(s_count * beam, 0.0);
}

/// Index tracking: slot j of the output takes the att/LM state of slot
/// parent_idx[j] and, when CTC is in play, the candidate CTC state
/// ctc_cand_idx[j] (row into the per-(slot, candidate) batch). Slots with
/// live[j] == 0 are left untouched. Copy semantics throughout: repeated
/// indices duplicate.
inline void select_states(const ScorerStateBatch& in,
                          const CtcStateBatch& ctc_candidates,
                          std::span<const std::int32_t> parent_idx,
                          std::span<const std::int32_t> ctc_cand_idx,
                          std::span<const std::uint8_t> live,
                          ScorerStateBatch& out) {
  const std::size_t n = in.slots();
  if (parent_idx.size() != n || (!live.empty() && live.size() != n)) {
    throw std::invalid_argument("select_states: index count mismatch");
  }
  const bool with_ctc = !ctc_cand_idx.empty();
  if (with_ctc && ctc_cand_idx.size() != n) {
    throw std::invalid_argument("select_states: ctc index count mismatch");
  }
  auto check = [](std::int32_t idx, std::size_t limit) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= limit) {
      throw std::invalid_argument("select_states: index out of range");
    }
  };
  for (std::size_t j = 0; j < n; ++j) {
    if (!live.empty() && !live[j]) continue;
    const std::int32_t p = parent_idx[j];
    check(p, n);
    std::copy(in.att.r.row(p).begin(), in.att.r.row(p).end(),
              out.att.r.row(j).begin());
    std::copy(in.att.c.row(p).begin(), in.att.c.row(p).end(),
              out.att.c.row(j).begin());
    std::copy(in.att.att_weights.row(p).begin(),
              in.att.att_weights.row(p).end(),
              out.att.att_weights.row(j).begin());
    std::copy(in.lm.h.row(p).begin(), in.lm.h.row(p).end(),
              out.lm.h.row(j).begin());
    if (with_ctc) {
      const std::int32_t q = ctc_cand_idx[j];
      check(q, ctc_candidates.slots());
      std::copy(ctc_candidates.gamma_n.row(q).begin(),
                ctc_candidates.gamma_n.row(q).end(),
                out.ctc.gamma_n.row(j).begin());
      std::copy(ctc_candidates.gamma_b.row(q).begin(),
                ctc_candidates.gamma_b.row(q).end(),
                out.ctc.gamma_b.row(j).begin());
      out.ctc.last_label[j] = ctc_candidates.last_label[q];
      out.ctc.prefix_score[j] = ctc_candidates.prefix_score[q];
    }
  }
}

}  // namespace vbeam

#endif  // VBEAM_SCORERS_HPP

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

#ifndef VBEAM_VECTORIZED_ENGINE_HPP
#define VBEAM_VECTORIZED_ENGINE_HPP

// The batched search. All S utterances and their B hypothesis slots live in
// flat [S*B]-row state arrays; one time step runs batched scoring over every
// active slot, local pruning to K = min(B, |L|) label candidates per slot,
// shallow fusion at those candidates, per-utterance global pruning over the
// B*K candidate block, and an index-tracked gather of every surviving
// state. Slot (s, b) maps to flat row s*B + b throughout; candidate
// (slot b, local rank j) maps to flat column b*K + j of the per-utterance
// candidate block. Inactive slots carry score -inf and are skipped by every
// kernel. All buffers are allocated once per decode and reused across steps.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vbeam/beam_types.hpp"
#include "vbeam/ctc_prefix.hpp"
#include "vbeam/encoder.hpp"
#include "vbeam/scorers.hpp"
#include "vbeam/synth_model.hpp"
#include "vbeam/tensor_ops.hpp"

namespace vbeam {

namespace vec_detail {

class PhaseClock {
 public:
  PhaseClock() : last_(std::chrono::steady_clock::now()) {}
  void lap(double& acc) {
    const auto now = std::chrono::steady_clock::now();
    acc += std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }

 private:
  std::chrono::steady_clock::time_point last_;
};

}  // namespace vec_detail

class BatchBeamDecoder {
 public:
  BatchBeamDecoder(const SyntheticModel& model,
                   std::span<const ScoreMatrix> utterances,
                   const BeamConfig& cfg, PhaseTimers* timers = nullptr)
      : model_(model), cfg_(cfg), timers_(timers) {
    cfg_.validate();
    if (utterances.empty()) {
      throw std::invalid_argument("decode_batch_vectorized: empty batch");
    }
    vec_detail::PhaseClock clock;
    encs_ = encode_batch(model, utterances);
    if (timers_) clock.lap(timers_->encode);

    s_count_ = utterances.size();
    beam_ = static_cast<std::size_t>(cfg_.beam);
    vocab_size_ = model.spec.vocab_size;
    local_k_ = std::min(beam_, vocab_size_);
    slots_ = s_count_ * beam_;
    t_max_ = encs_[0].hidden.rows();
    use_ctc_ = cfg_.fusion.ctc_weight != 0.0;
    use_lm_ = cfg_.fusion.lm_weight != 0.0;

    enc_per_slot_.resize(slots_);
    for (std::size_t s = 0; s < s_count_; ++s) {
      for (std::size_t b = 0; b < beam_; ++b) {
        enc_per_slot_[s * beam_ + b] = &encs_[s];
      }
    }

    states_ = init_scorer_states(model, encs_, beam_, use_ctc_);
    scored_ = init_scorer_states(model, encs_, beam_, /*with_ctc=*/false);
    next_ = init_scorer_states(model, encs_, beam_, use_ctc_);

    // Q0 is all zeros; the beam then grows from a single expandable slot
    // per utterance, so the root hypothesis is never duplicated.
    alpha_ = init_accumulated_scores(s_count_, beam_);
    alpha_next_.assign(slots_, kNegInf);
    active_.assign(slots_, 0);
    for (std::size_t s = 0; s < s_count_; ++s) {
      active_[s * beam_] = 1;
      for (std::size_t b = 1; b < beam_; ++b) alpha_[s * beam_ + b] = kNegInf;
    }

    labels_.resize(slots_);
    labels_next_.resize(slots_);
    att_total_.assign(slots_, 0.0);
    ctc_total_.assign(slots_, 0.0);
    lm_total_.assign(slots_, 0.0);
    att_total_next_.assign(slots_, 0.0);
    ctc_total_next_.assign(slots_, 0.0);
    lm_total_next_.assign(slots_, 0.0);
    last_labels_.assign(slots_, model.vocab.sos_id);

    gamma_ = ScoreMatrix(slots_, vocab_size_, kNegInf);
    lm_rows_ = ScoreMatrix(use_lm_ ? slots_ : 0, vocab_size_);
    local_vals_ = ScoreMatrix(slots_, local_k_, kNegInf);
    local_idx_ = IndexMatrix(slots_, local_k_, 0);
    lm_cand_ = ScoreMatrix(use_lm_ ? slots_ : 0, local_k_);
    ctc_delta_ = ScoreMatrix(use_ctc_ ? slots_ : 0, local_k_);
    if (use_ctc_) ctc_cand_.resize(slots_ * local_k_, t_max_);
    fused_flat_ = ScoreMatrix(s_count_, beam_ * local_k_, kNegInf);
    ws_.resize(slots_, model.spec.d_dec, model.spec.d_enc, t_max_);
    order_.resize(std::max(vocab_size_, beam_ * local_k_));
    parent_idx_.assign(slots_, 0);
    ctc_cand_idx_.assign(slots_, 0);
    live_.assign(slots_, 0);
    selected_.resize(beam_);

    finished_.reserve(s_count_);
    truncated_.reserve(s_count_);
    steps_.assign(s_count_, 0);
    max_steps_.resize(s_count_);
    done_.assign(s_count_, 0);
    for (std::size_t s = 0; s < s_count_; ++s) {
      max_steps_[s] = cfg_.max_steps(encs_[s].frames);
      finished_.emplace_back(cfg_.nbest);
      truncated_.emplace_back(cfg_.nbest);
    }
    live_utts_ = s_count_;
    if (timers_) clock.lap(timers_->other);
  }

  bool done() const { return live_utts_ == 0; }

  /// One full vectorized time step. A no-op once every utterance is done.
  void step() {
    if (done()) return;
    vec_detail::PhaseClock clock;

    att_score_batch(model_, enc_per_slot_, states_.att, last_labels_, active_,
                    scored_.att, gamma_, ws_);
    if (timers_) clock.lap(timers_->att);

    local_prune();
    if (timers_) clock.lap(timers_->prune);

    if (use_lm_) {
      lm_score_batch(model_, states_.lm, last_labels_, active_, scored_.lm,
                     lm_rows_);
      for (std::size_t i = 0; i < slots_; ++i) {
        if (!active_[i]) continue;
        for (std::size_t j = 0; j < local_k_; ++j) {
          lm_cand_(i, j) = lm_rows_(i, local_idx_(i, j));
        }
      }
    }
    if (timers_) clock.lap(timers_->lm);

    if (use_ctc_) {
      ctc_prefix_score_batch(enc_per_slot_, states_.ctc, local_idx_,
                             model_.vocab.eos_id, active_, ctc_delta_,
                             ctc_cand_, ws_.ctc);
    }
    if (timers_) clock.lap(timers_->ctc);

    fuse_candidates();
    global_prune_and_compose();
    if (timers_) clock.lap(timers_->prune);

    select_states(scored_, ctc_cand_, parent_idx_,
                  use_ctc_ ? std::span<const std::int32_t>(ctc_cand_idx_)
                           : std::span<const std::int32_t>(),
                  live_, next_);
    commit_step();
    if (timers_) clock.lap(timers_->select);
  }

  /// Drains per-utterance results; call after done().
  std::vector<DecodeResult> take_results(double seconds_per_call = 0.0) {
    std::vector<DecodeResult> out;
    out.reserve(s_count_);
    for (std::size_t s = 0; s < s_count_; ++s) {
      out.push_back(assemble_result(finished_[s], truncated_[s], cfg_,
                                    steps_[s], seconds_per_call));
    }
    return out;
  }

  // Introspection for tests.
  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<std::uint8_t>& active() const { return active_; }
  const std::vector<std::vector<Label>>& label_histories() const {
    return labels_;
  }
  std::int64_t steps(std::size_t s) const { return steps_[s]; }
  const ScorerStateBatch& scorer_states() const { return states_; }

 private:
  void local_prune() {
    for (std::size_t i = 0; i < slots_; ++i) {
      if (!active_[i]) continue;
      std::span<const double> row = gamma_.row(i);
      auto* order = order_.data();
      std::iota(order, order + vocab_size_, 0);
      std::partial_sort(order, order + local_k_, order + vocab_size_,
                        [&row](std::int32_t a, std::int32_t b) {
                          return detail::topk_before(row[a], a, row[b], b);
                        });
      for (std::size_t j = 0; j < local_k_; ++j) {
        local_vals_(i, j) = row[order[j]];
        local_idx_(i, j) = order[j];
      }
    }
  }

  void fuse_candidates() {
    for (std::size_t s = 0; s < s_count_; ++s) {
      if (done_[s]) continue;
      std::span<double> frow = fused_flat_.row(s);
      for (std::size_t b = 0; b < beam_; ++b) {
        const std::size_t i = s * beam_ + b;
        double* cell = frow.data() + b * local_k_;
        if (!active_[i]) {
          std::fill(cell, cell + local_k_, kNegInf);
          continue;
        }
        for (std::size_t j = 0; j < local_k_; ++j) {
          const double att = local_vals_(i, j);
          const double ctc = use_ctc_ ? ctc_delta_(i, j) : 0.0;
          const double lm = use_lm_ ? lm_cand_(i, j) : 0.0;
          cell[j] = alpha_[i] + fuse_one(att, ctc, lm, cfg_.fusion);
        }
      }
    }
  }

  void global_prune_and_compose() {
    const std::size_t width = beam_ * local_k_;
    for (std::size_t s = 0; s < s_count_; ++s) {
      if (done_[s]) continue;
      std::span<const double> row = fused_flat_.row(s);
      auto* order = order_.data();
      std::iota(order, order + width, 0);
      std::partial_sort(order, order + beam_, order + width,
                        [&row](std::int32_t a, std::int32_t b) {
                          return detail::topk_before(row[a], a, row[b], b);
                        });
      std::copy(order, order + beam_, selected_.begin());
      if (cfg_.check_pruning) check_pruning_oracle(row, width);

      for (std::size_t r = 0; r < beam_; ++r) {
        const std::size_t slot = s * beam_ + r;
        const std::int32_t f = selected_[r];
        const double total = row[f];
        if (total == kNegInf) {
          kill_slot(slot);
          continue;
        }
        const std::size_t parent_local = static_cast<std::size_t>(f) / local_k_;
        const std::size_t j = static_cast<std::size_t>(f) % local_k_;
        const std::size_t parent = s * beam_ + parent_local;
        if (cfg_.check_pruning && !active_[parent]) {
          throw std::logic_error(
              "beam step: survivor drawn from an inactive slot");
        }
        const Label label = local_idx_(parent, j);
        const double att_t = att_total_[parent] + local_vals_(parent, j);
        const double ctc_t =
            ctc_total_[parent] + (use_ctc_ ? ctc_delta_(parent, j) : 0.0);
        const double lm_t =
            lm_total_[parent] + (use_lm_ ? lm_cand_(parent, j) : 0.0);
        if (label == model_.vocab.eos_id) {
          Hypothesis h;
          h.labels = labels_[parent];
          h.labels.push_back(label);
          h.score = total;
          h.final_score = total + cfg_.length_penalty *
                                      static_cast<double>(h.labels.size());
          h.att_total = att_t;
          h.ctc_total = ctc_t;
          h.lm_total = lm_t;
          finished_[s].offer(std::move(h));
          kill_slot(slot);
          continue;
        }
        live_[slot] = 1;
        alpha_next_[slot] = total;
        att_total_next_[slot] = att_t;
        ctc_total_next_[slot] = ctc_t;
        lm_total_next_[slot] = lm_t;
        labels_next_[slot] = labels_[parent];
        labels_next_[slot].push_back(label);
        parent_idx_[slot] = static_cast<std::int32_t>(parent);
        ctc_cand_idx_[slot] =
            static_cast<std::int32_t>(parent * local_k_ + j);
      }
    }
  }

  void kill_slot(std::size_t slot) {
    live_[slot] = 0;
    alpha_next_[slot] = kNegInf;
    att_total_next_[slot] = 0.0;
    ctc_total_next_[slot] = 0.0;
    lm_total_next_[slot] = 0.0;
    labels_next_[slot].clear();
  }

  void check_pruning_oracle(std::span<const double> row, std::size_t width) {
    std::vector<std::int32_t> oracle(width);
    std::iota(oracle.begin(), oracle.end(), 0);
    std::sort(oracle.begin(), oracle.end(),
              [&row](std::int32_t a, std::int32_t b) {
                return detail::topk_before(row[a], a, row[b], b);
              });
    for (std::size_t r = 0; r < beam_; ++r) {
      if (oracle[r] != selected_[r]) {
        throw std::logic_error("beam step: pruning disagrees with sort oracle");
      }
    }
  }

  void commit_step() {
    std::swap(states_, next_);
    std::swap(alpha_, alpha_next_);
    std::swap(att_total_, att_total_next_);
    std::swap(ctc_total_, ctc_total_next_);
    std::swap(lm_total_, lm_total_next_);
    labels_.swap(labels_next_);

    for (std::size_t s = 0; s < s_count_; ++s) {
      if (done_[s]) continue;
      ++steps_[s];
      std::size_t alive = 0;
      for (std::size_t b = 0; b < beam_; ++b) {
        const std::size_t slot = s * beam_ + b;
        active_[slot] = live_[slot];
        if (live_[slot]) {
          ++alive;
          last_labels_[slot] = labels_[slot].back();
        }
      }
      bool utt_done = (alive == 0);
      if (!utt_done && steps_[s] >= static_cast<std::int64_t>(max_steps_[s])) {
        // Length cutoff: the still-active hypotheses become the truncated
        // pool and the utterance's slots go quiet.
        for (std::size_t b = 0; b < beam_; ++b) {
          const std::size_t slot = s * beam_ + b;
          if (!live_[slot]) continue;
          Hypothesis h;
          h.labels = labels_[slot];
          h.score = alpha_[slot];
          h.final_score = alpha_[slot] + cfg_.length_penalty *
                                             static_cast<double>(
                                                 h.labels.size());
          h.att_total = att_total_[slot];
          h.ctc_total = ctc_total_[slot];
          h.lm_total = lm_total_[slot];
          h.truncated = true;
          truncated_[s].offer(std::move(h));
        }
        utt_done = true;
      }
      if (utt_done) {
        done_[s] = 1;
        --live_utts_;
        for (std::size_t b = 0; b < beam_; ++b) {
          const std::size_t slot = s * beam_ + b;
          active_[slot] = 0;
          live_[slot] = 0;
          alpha_[slot] = kNegInf;
          alpha_next_[slot] = kNegInf;
        }
      }
    }
  }

  const SyntheticModel& model_;
  BeamConfig cfg_;
  PhaseTimers* timers_;

  std::vector<EncoderOutput> encs_;
  std::vector<const EncoderOutput*> enc_per_slot_;
  std::size_t s_count_ = 0, beam_ = 0, vocab_size_ = 0, local_k_ = 0,
              slots_ = 0, t_max_ = 0;
  bool use_ctc_ = false, use_lm_ = false;

  ScorerStateBatch states_, scored_, next_;
  std::vector<double> alpha_, alpha_next_;
  std::vector<std::uint8_t> active_;
  std::vector<std::vector<Label>> labels_, labels_next_;
  std::vector<double> att_total_, ctc_total_, lm_total_;
  std::vector<double> att_total_next_, ctc_total_next_, lm_total_next_;
  std::vector<Label> last_labels_;

  ScoreMatrix gamma_, lm_rows_, local_vals_, lm_cand_, ctc_delta_, fused_flat_;
  IndexMatrix local_idx_;
  CtcStateBatch ctc_cand_;
  ScorerWorkspace ws_;
  std::vector<std::int32_t> order_, parent_idx_, ctc_cand_idx_, selected_;
  std::vector<std::uint8_t> live_;

  std::vector<NBestPool> finished_, truncated_;
  std::vector<std::int64_t> steps_;
  std::vector<std::size_t> max_steps_;
  std::vector<std::uint8_t> done_;
  std::size_t live_utts_ = 0;
};

/// Decodes S utterances in one fused [S*B]-shaped search. Per-utterance
/// results match decode_scalar_reference (identical sequences, scores to
/// within accumulation noise).
inline std::vector<DecodeResult> decode_batch_vectorized(
    const SyntheticModel& model, std::span<const ScoreMatrix> utterances,
    const BeamConfig& cfg, PhaseTimers* timers = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  BatchBeamDecoder decoder(model, utterances, cfg, timers);
  while (!decoder.done()) decoder.step();
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return decoder.take_results(seconds);
}

}  // namespace vbeam

#endif  // VBEAM_VECTORIZED_ENGINE_HPP

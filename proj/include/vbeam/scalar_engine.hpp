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

#ifndef VBEAM_SCALAR_ENGINE_HPP
#define VBEAM_SCALAR_ENGINE_HPP

// The conventional beam search: hypotheses live in a FIFO queue, one record
// per hypothesis holding its label history, accumulated score and every
// scorer state. Each time step walks the queue hypothesis by hypothesis,
// expands, prunes locally then globally, and rebuilds the queue from the
// survivor records. Deliberately kept in this per-record style so that the
// batched engine's gain measures the effect of vectorization alone.

#include <algorithm>
#include <chrono>
#include <deque>
#include <numeric>
#include <utility>
#include <vector>

#include "vbeam/beam_types.hpp"
#include "vbeam/ctc_prefix.hpp"
#include "vbeam/encoder.hpp"
#include "vbeam/scorers.hpp"
#include "vbeam/synth_model.hpp"
#include "vbeam/tensor_ops.hpp"

namespace vbeam {

namespace scalar_detail {

/// The per-hypothesis record of Section-2-style decoding: label history,
/// accumulated score, and the recurrent states that must be pruned along
/// with it.
struct HypRecord {
  std::vector<Label> labels;
  double alpha = 0.0;
  double att_total = 0.0;
  double ctc_total = 0.0;
  double lm_total = 0.0;
  AttDecoderState att;
  LMState lm;
  CtcPrefixState ctc;
};

struct Candidate {
  double total;
  std::int32_t flat;  // parent_position * K + local_rank
  std::int32_t parent;
  Label label;
  double att_val;
  double ctc_delta;
  double lm_val;
  CtcPrefixState ctc_state;
};

}  // namespace scalar_detail

/// Classic per-hypothesis beam search over a single utterance. Local
/// pruning keeps the top min(B, |L|) labels per hypothesis by attention
/// score; CTC and LM scores are fused for those survivors; global pruning
/// keeps the top B of the pooled candidates with ties broken by flat
/// candidate index.
inline DecodeResult decode_scalar_reference(const SyntheticModel& model,
                                            const ScoreMatrix& utterance,
                                            const BeamConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  const EncoderOutput enc = encode_one(model, utterance);
  const Vocabulary& vocab = model.vocab;
  const std::size_t vocab_size = vocab.size;
  const std::size_t beam = cfg.beam;
  const std::size_t local_k = std::min<std::size_t>(beam, vocab_size);
  const std::size_t max_steps = cfg.max_steps(enc.frames);
  const bool use_ctc = cfg.fusion.ctc_weight != 0.0;
  const bool use_lm = cfg.fusion.lm_weight != 0.0;

  std::deque<scalar_detail::HypRecord> queue;
  {
    scalar_detail::HypRecord root;
    root.att = init_att_state(model, enc);
    root.lm = init_lm_state(model);
    if (use_ctc) root.ctc = init_ctc_state(enc);
    queue.push_back(std::move(root));
  }

  NBestPool finished(cfg.nbest);
  NBestPool truncated(cfg.nbest);
  std::int64_t steps = 0;

  std::vector<scalar_detail::Candidate> candidates;
  while (steps < static_cast<std::int64_t>(max_steps) && !queue.empty()) {
    ++steps;
    candidates.clear();
    std::vector<AttDecoderState> new_att(queue.size());
    std::vector<LMState> new_lm(queue.size());

    for (std::size_t b = 0; b < queue.size(); ++b) {
      scalar_detail::HypRecord& rec = queue[b];
      const Label last = rec.labels.empty() ? vocab.sos_id : rec.labels.back();

      auto [gamma, att_next] = att_score_one(model, enc, rec.att, last);
      new_att[b] = std::move(att_next);
      std::vector<double> lm_row;
      if (use_lm) {
        auto [row, lm_next] = lm_score_one(model, rec.lm, last);
        lm_row = std::move(row);
        new_lm[b] = std::move(lm_next);
      } else {
        new_lm[b] = rec.lm;
      }

      // Local pruning on the attention scores alone (the accumulated score
      // is constant within a row, so it cannot change the per-row order).
      std::vector<std::int32_t> order(vocab_size);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&gamma](std::int32_t x, std::int32_t y) {
                  return detail::topk_before(gamma[x], x, gamma[y], y);
                });

      for (std::size_t j = 0; j < local_k; ++j) {
        const Label c = order[j];
        scalar_detail::Candidate cand;
        cand.parent = static_cast<std::int32_t>(b);
        cand.flat = static_cast<std::int32_t>(b * local_k + j);
        cand.label = c;
        cand.att_val = gamma[c];
        cand.lm_val = use_lm ? lm_row[c] : 0.0;
        if (use_ctc) {
          auto [delta, state] =
              ctc_prefix_score_one(enc, rec.ctc, c, vocab.eos_id);
          cand.ctc_delta = delta;
          cand.ctc_state = std::move(state);
        } else {
          cand.ctc_delta = 0.0;
        }
        const double fused =
            fuse_one(cand.att_val, cand.ctc_delta, cand.lm_val, cfg.fusion);
        cand.total = rec.alpha + fused;
        candidates.push_back(std::move(cand));
      }
    }

    // Global pruning across the pooled candidates.
    std::sort(candidates.begin(), candidates.end(),
              [](const scalar_detail::Candidate& x,
                 const scalar_detail::Candidate& y) {
                return detail::topk_before(x.total, x.flat, y.total, y.flat);
              });
    const std::size_t survivors = std::min(beam, candidates.size());

    std::deque<scalar_detail::HypRecord> next_queue;
    for (std::size_t r = 0; r < survivors; ++r) {
      scalar_detail::Candidate& cand = candidates[r];
      const scalar_detail::HypRecord& parent = queue[cand.parent];
      scalar_detail::HypRecord rec;
      rec.labels = parent.labels;
      rec.labels.push_back(cand.label);
      rec.alpha = cand.total;
      rec.att_total = parent.att_total + cand.att_val;
      rec.ctc_total = parent.ctc_total + cand.ctc_delta;
      rec.lm_total = parent.lm_total + cand.lm_val;
      if (cand.label == vocab.eos_id) {
        Hypothesis h;
        h.labels = std::move(rec.labels);
        h.score = rec.alpha;
        h.final_score =
            rec.alpha + cfg.length_penalty * static_cast<double>(h.labels.size());
        h.att_total = rec.att_total;
        h.ctc_total = rec.ctc_total;
        h.lm_total = rec.lm_total;
        finished.offer(std::move(h));
        continue;
      }
      rec.att = new_att[cand.parent];
      rec.lm = new_lm[cand.parent];
      if (use_ctc) rec.ctc = std::move(cand.ctc_state);
      next_queue.push_back(std::move(rec));
    }
    queue = std::move(next_queue);
  }

  for (scalar_detail::HypRecord& rec : queue) {
    Hypothesis h;
    h.labels = std::move(rec.labels);
    h.score = rec.alpha;
    h.final_score =
        rec.alpha + cfg.length_penalty * static_cast<double>(h.labels.size());
    h.att_total = rec.att_total;
    h.ctc_total = rec.ctc_total;
    h.lm_total = rec.lm_total;
    h.truncated = true;
    truncated.offer(std::move(h));
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return assemble_result(finished, truncated, cfg, steps, seconds);
}

}  // namespace vbeam

#endif  // VBEAM_SCALAR_ENGINE_HPP

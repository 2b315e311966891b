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

#ifndef VBEAM_BEAM_TYPES_HPP
#define VBEAM_BEAM_TYPES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vbeam/scorers.hpp"
#include "vbeam/vocab.hpp"

namespace vbeam {

struct BeamConfig {
  std::int32_t beam = 20;       // B
  double max_len_ratio = 1.0;   // max output steps = ceil(ratio * T_enc)
  FusionWeights fusion;
  std::int32_t nbest = 1;
  double length_penalty = 0.0;  // additive per emitted label, default off
  bool check_pruning = false;   // re-check every pruning step vs a sort oracle

  void validate() const {
    if (beam < 1) throw std::invalid_argument("BeamConfig: beam must be >= 1");
    if (!(max_len_ratio > 0.0)) {
      throw std::invalid_argument("BeamConfig: max_len_ratio must be > 0");
    }
    if (nbest < 1 || nbest > beam) {
      throw std::invalid_argument("BeamConfig: need 1 <= nbest <= beam");
    }
    fusion.validate();
  }

  std::size_t max_steps(std::size_t t_enc) const {
    return static_cast<std::size_t>(
        std::ceil(max_len_ratio * static_cast<double>(t_enc)));
  }
};

struct Hypothesis {
  std::vector<Label> labels;  // l1..lt; ends with eos iff finalized
  double score = 0.0;         // accumulated alpha
  double final_score = 0.0;   // alpha + length_penalty * |labels|
  double att_total = 0.0;
  double ctc_total = 0.0;
  double lm_total = 0.0;
  bool truncated = false;     // hit the length cap without emitting eos
};

/// Final ranking order: score descending, shorter first, then lexicographic
/// labels. Total over distinct hypotheses.
inline bool hyp_rank_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.final_score != b.final_score) return a.final_score > b.final_score;
  if (a.labels.size() != b.labels.size()) {
    return a.labels.size() < b.labels.size();
  }
  return a.labels < b.labels;
}

/// Keeps the best `capacity` hypotheses under hyp_rank_before.
class NBestPool {
 public:
  explicit NBestPool(std::size_t capacity) : capacity_(capacity) {}

  void offer(Hypothesis&& h) {
    if (capacity_ == 0) return;
    if (items_.size() == capacity_ && !hyp_rank_before(h, items_.back())) {
      return;
    }
    auto pos = std::upper_bound(items_.begin(), items_.end(), h,
                                [](const Hypothesis& a, const Hypothesis& b) {
                                  return hyp_rank_before(a, b);
                                });
    items_.insert(pos, std::move(h));
    if (items_.size() > capacity_) items_.pop_back();
  }

  const std::vector<Hypothesis>& items() const { return items_; }
  bool empty() const { return items_.empty(); }
  void clear() { items_.clear(); }

 private:
  std::size_t capacity_;
  std::vector<Hypothesis> items_;  // sorted best-first
};

struct DecodeResult {
  std::vector<Hypothesis> nbest;  // descending final score
  std::int64_t steps = 0;
  double seconds = 0.0;
};

/// Ranks finished hypotheses first; if fewer than nbest finished, pads from
/// the truncated survivors of the length cutoff.
inline DecodeResult assemble_result(const NBestPool& finished,
                                    const NBestPool& truncated,
                                    const BeamConfig& cfg, std::int64_t steps,
                                    double seconds) {
  if (finished.empty() && truncated.empty()) {
    throw std::logic_error("finalize: no hypotheses to rank");
  }
  DecodeResult out;
  out.steps = steps;
  out.seconds = seconds;
  const std::size_t want = static_cast<std::size_t>(cfg.nbest);
  for (const Hypothesis& h : finished.items()) {
    if (out.nbest.size() == want) break;
    out.nbest.push_back(h);
  }
  for (const Hypothesis& h : truncated.items()) {
    if (out.nbest.size() == want) break;
    out.nbest.push_back(h);
  }
  return out;
}

/// Per-phase wall-clock accounting for the benchmark breakdown (seconds).
struct PhaseTimers {
  double encode = 0.0;
  double att = 0.0;
  double lm = 0.0;
  double ctc = 0.0;
  double prune = 0.0;
  double select = 0.0;
  double other = 0.0;

  double step_total() const { return att + lm + ctc + prune + select + other; }
};

}  // namespace vbeam

#endif  // VBEAM_BEAM_TYPES_HPP

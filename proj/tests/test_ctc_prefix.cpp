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

#include "vbeam/ctc_prefix.hpp"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "vbeam/kernels.hpp"
#include "vbeam/rng.hpp"

namespace vbeam {
namespace {

// ---------------------------------------------------------------------------
// Brute-force alignment oracle. Enumerates every (|L|+1)^T frame alignment,
// collapses it (remove consecutive repeats, then blanks), and sums the
// probability of alignments whose collapse begins with (or, for closed
// prefixes, equals) the given prefix. Independent of the recursion under
// test by construction.

std::vector<Label> collapse(const std::vector<Label>& alignment, Label blank) {
  std::vector<Label> out;
  Label prev = -100;
  for (Label a : alignment) {
    if (a == prev) continue;
    prev = a;
    if (a != blank) out.push_back(a);
  }
  return out;
}

bool begins_with(const std::vector<Label>& seq,
                 const std::vector<Label>& prefix) {
  if (seq.size() < prefix.size()) return false;
  return std::equal(prefix.begin(), prefix.end(), seq.begin());
}

double oracle_prefix_prob(const EncoderOutput& enc,
                          const std::vector<Label>& prefix, bool exact) {
  const std::size_t t = enc.frames;
  const std::size_t symbols = enc.ctc_logprobs.cols();  // |L| + 1
  const Label blank = static_cast<Label>(symbols - 1);
  std::vector<Label> alignment(t, 0);
  double total = 0.0;
  while (true) {
    double p = 1.0;
    for (std::size_t f = 0; f < t; ++f) {
      p *= std::exp(enc.ctc_logprobs(f, alignment[f]));
    }
    const std::vector<Label> c = collapse(alignment, blank);
    const bool match = exact ? (c == prefix) : begins_with(c, prefix);
    if (match) total += p;
    // odometer
    std::size_t pos = 0;
    while (pos < t) {
      if (++alignment[pos] < static_cast<Label>(symbols)) break;
      alignment[pos] = 0;
      ++pos;
    }
    if (pos == t) break;
  }
  return total;
}

/// Hand-built encoder output carrying only the CTC head (hidden unused).
EncoderOutput make_ctc_output(std::size_t frames, std::size_t num_labels,
                              SplitMix64* rng) {
  EncoderOutput enc;
  enc.frames = frames;
  enc.hidden = ScoreMatrix(frames, 1, 0.0);
  enc.ctc_logprobs = ScoreMatrix(frames, num_labels + 1, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    std::span<double> row = enc.ctc_logprobs.row(t);
    if (rng != nullptr) {
      for (double& v : row) v = 2.0 * rng->next_feature();
    }
    log_softmax_inplace(row);
  }
  return enc;
}

EncoderOutput make_uniform_ctc_output(std::size_t frames,
                                      std::size_t num_labels) {
  return make_ctc_output(frames, num_labels, nullptr);
}

/// Walks the scorer along the prefix from the empty state.
CtcPrefixState advance_prefix(const EncoderOutput& enc,
                              const std::vector<Label>& prefix, Label eos_id) {
  CtcPrefixState s = init_ctc_state(enc);
  for (Label c : prefix) {
    s = ctc_prefix_score_one(enc, s, c, eos_id).second;
  }
  return s;
}

constexpr Label kNoEos = -1;

TEST(CtcPrefix, UniformPosteriorsMatchClosedForm) {
  // T=4, two labels plus blank, every posterior 1/3. The chance that the
  // collapsed output begins with label a is sum_t (1/3)^t = 40/81.
  const EncoderOutput enc = make_uniform_ctc_output(4, 2);
  CtcPrefixState empty = init_ctc_state(enc);
  auto [delta, state] = ctc_prefix_score_one(enc, empty, 0, kNoEos);
  EXPECT_NEAR(std::exp(delta), 40.0 / 81.0, 1e-12);
  EXPECT_NEAR(std::exp(delta), oracle_prefix_prob(enc, {0}, false), 1e-9);
}

TEST(CtcPrefix, AllBlankPosteriorsMakeEmptyOutputCertain) {
  EncoderOutput enc;
  enc.frames = 5;
  enc.hidden = ScoreMatrix(5, 1, 0.0);
  enc.ctc_logprobs = ScoreMatrix(5, 3, kNegInf);
  for (std::size_t t = 0; t < 5; ++t) enc.ctc_logprobs(t, 2) = 0.0;
  const CtcPrefixState empty = init_ctc_state(enc);
  const Label eos = 1;
  auto [delta, state] = ctc_prefix_score_one(enc, empty, eos, eos);
  EXPECT_EQ(delta, 0.0);
}

TEST(CtcPrefix, RepeatedLabelNeedsBlankGap) {
  SplitMix64 rng(31);
  const EncoderOutput enc = make_ctc_output(5, 2, &rng);
  const CtcPrefixState g = advance_prefix(enc, {0}, kNoEos);
  auto [delta_same, s_same] = ctc_prefix_score_one(enc, g, 0, kNoEos);
  auto [delta_diff, s_diff] = ctc_prefix_score_one(enc, g, 1, kNoEos);
  EXPECT_NEAR(std::exp(s_same.prefix_score),
              oracle_prefix_prob(enc, {0, 0}, false), 1e-9);
  EXPECT_NEAR(std::exp(s_diff.prefix_score),
              oracle_prefix_prob(enc, {0, 1}, false), 1e-9);
}

TEST(CtcPrefix, ExhaustiveOracleUpToLengthThree) {
  // Every prefix of length <= 3 over |L|=3, T in 3..6, random posteriors.
  SplitMix64 rng(77);
  for (std::size_t t = 3; t <= 6; ++t) {
    const EncoderOutput enc = make_ctc_output(t, 3, &rng);
    std::vector<std::vector<Label>> prefixes = {{}};
    for (int len = 0; len < 3; ++len) {
      std::vector<std::vector<Label>> next;
      for (const auto& p : prefixes) {
        if (p.size() == static_cast<std::size_t>(len)) {
          for (Label c = 0; c < 3; ++c) {
            auto q = p;
            q.push_back(c);
            next.push_back(q);
          }
        }
      }
      prefixes.insert(prefixes.end(), next.begin(), next.end());
    }
    for (const auto& prefix : prefixes) {
      const CtcPrefixState s = advance_prefix(enc, prefix, kNoEos);
      const double want = oracle_prefix_prob(enc, prefix, false);
      ASSERT_NEAR(std::exp(s.prefix_score), want, 1e-9)
          << "T=" << t << " prefix length " << prefix.size();
      // Closing with eos must match the exact-sequence mass.
      const double eos_delta = ctc_eos_score(enc, CtcPrefixView(s));
      const double want_exact = oracle_prefix_prob(enc, prefix, true);
      ASSERT_NEAR(std::exp(s.prefix_score + eos_delta), want_exact, 1e-9);
    }
  }
}

TEST(CtcPrefix, PrefixScoresAreMonotone) {
  SplitMix64 rng(5);
  const EncoderOutput enc = make_ctc_output(6, 3, &rng);
  CtcPrefixState s = init_ctc_state(enc);
  double prev = s.prefix_score;
  for (Label c : {2, 0, 0, 1}) {
    auto [delta, next] = ctc_prefix_score_one(enc, s, c, kNoEos);
    EXPECT_LE(delta, 1e-12);  // psi(g.c) <= psi(g)
    EXPECT_LE(next.prefix_score, prev + 1e-12);
    prev = next.prefix_score;
    s = std::move(next);
  }
}

TEST(CtcPrefix, BatchedPathBitIdenticalToSinglePath) {
  SplitMix64 rng(9);
  const std::size_t t = 6;
  const EncoderOutput enc = make_ctc_output(t, 4, &rng);
  const std::size_t n = 3, k = 3;

  CtcStateBatch states;
  states.resize(n, t);
  std::vector<CtcPrefixState> singles;
  singles.push_back(init_ctc_state(enc));
  singles.push_back(advance_prefix(enc, {1}, kNoEos));
  singles.push_back(advance_prefix(enc, {2, 2}, kNoEos));
  for (std::size_t i = 0; i < n; ++i) states.set(i, singles[i]);

  IndexMatrix cand(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    cand(i, 0) = 1;  // equals last label of slot 1
    cand(i, 1) = 2;
    cand(i, 2) = 3;  // eos in this toy
  }
  const Label eos = 3;
  std::vector<const EncoderOutput*> encs(n, &enc);
  ScoreMatrix delta(n, k);
  CtcStateBatch cand_states;
  cand_states.resize(n * k, t);
  CtcWorkspace ws;
  ws.resize(t);
  ctc_prefix_score_batch(encs, states, cand, eos, {}, delta, cand_states, ws);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      auto [d, st] = ctc_prefix_score_one(enc, singles[i], cand(i, j), eos);
      ASSERT_EQ(delta(i, j), d) << i << "," << j;
      const std::size_t row = i * k + j;
      ASSERT_EQ(cand_states.prefix_score[row], st.prefix_score);
      for (std::size_t f = 0; f < t; ++f) {
        ASSERT_EQ(cand_states.gamma_n(row, f), st.gamma_n[f]);
        ASSERT_EQ(cand_states.gamma_b(row, f), st.gamma_b[f]);
      }
    }
  }
}

TEST(CtcPrefix, CandidateOutsideLabelSetThrows) {
  const EncoderOutput enc = make_uniform_ctc_output(3, 2);
  const CtcPrefixState empty = init_ctc_state(enc);
  EXPECT_THROW(ctc_prefix_score_one(enc, empty, -2, kNoEos),
               std::invalid_argument);
  // The blank index itself is not a label.
  EXPECT_THROW(ctc_prefix_score_one(enc, empty, 2, kNoEos),
               std::invalid_argument);
}

}  // namespace
}  // namespace vbeam

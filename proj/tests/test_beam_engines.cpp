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

#include <cmath>
#include <vector>

#include "common/search_oracles.hpp"
#include "gtest/gtest.h"
#include "vbeam/scalar_engine.hpp"
#include "vbeam/synth_model.hpp"
#include "vbeam/tensor_ops.hpp"
#include "vbeam/vectorized_engine.hpp"

namespace vbeam {
namespace {

SyntheticModel make_model(std::uint64_t seed, std::int32_t vocab,
                          std::int32_t dim = 8) {
  SyntheticModelSpec spec;
  spec.seed = seed;
  spec.d_feat = 5;
  spec.d_enc = dim;
  spec.d_dec = dim;
  spec.d_lm = dim;
  spec.vocab_size = vocab;
  return generate_model(spec);
}

std::vector<ScoreMatrix> make_utts(std::uint64_t seed, std::int32_t n,
                                   std::int32_t t_min, std::int32_t t_max,
                                   std::int32_t d_feat = 5) {
  UtteranceSetSpec spec;
  spec.seed = seed;
  spec.count = n;
  spec.t_min = t_min;
  spec.t_max = t_max;
  spec.d_feat = d_feat;
  return generate_utterances(spec).features;
}

void expect_same_results(const DecodeResult& a, const DecodeResult& b,
                         double tol) {
  ASSERT_EQ(a.nbest.size(), b.nbest.size());
  for (std::size_t i = 0; i < a.nbest.size(); ++i) {
    ASSERT_EQ(a.nbest[i].labels, b.nbest[i].labels) << "rank " << i;
    ASSERT_NEAR(a.nbest[i].score, b.nbest[i].score, tol);
    ASSERT_EQ(a.nbest[i].truncated, b.nbest[i].truncated);
  }
}

TEST(ScalarEngine, BeamOfOneIsGreedyArgmaxChain) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const SyntheticModel model = make_model(seed, 12);
    const auto utts = make_utts(seed + 100, 1, 10, 20);
    BeamConfig cfg;
    cfg.beam = 1;
    cfg.nbest = 1;
    cfg.fusion = {0.0, 0.0};
    const DecodeResult got = decode_scalar_reference(model, utts[0], cfg);
    const Hypothesis want = testing::greedy_oracle(model, utts[0], cfg);
    ASSERT_EQ(got.nbest[0].labels, want.labels);
    ASSERT_NEAR(got.nbest[0].score, want.score, 1e-9);
    ASSERT_EQ(got.nbest[0].truncated, want.truncated);
  }
}

TEST(ScalarEngine, DeterministicAcrossRuns) {
  const SyntheticModel model = make_model(42, 20);
  const auto utts = make_utts(42, 1, 15, 15);
  BeamConfig cfg;
  cfg.beam = 20;
  cfg.nbest = 5;
  const DecodeResult a = decode_scalar_reference(model, utts[0], cfg);
  const DecodeResult b = decode_scalar_reference(model, utts[0], cfg);
  ASSERT_EQ(a.nbest.size(), b.nbest.size());
  for (std::size_t i = 0; i < a.nbest.size(); ++i) {
    ASSERT_EQ(a.nbest[i].labels, b.nbest[i].labels);
    ASSERT_EQ(a.nbest[i].score, b.nbest[i].score);
  }
}

TEST(Engines, ExhaustiveRecoveryOnToys) {
  // B = |L|^depth recovers the full enumeration's ranking on fixed tables.
  for (int depth = 1; depth <= 3; ++depth) {
    const SyntheticModel model = make_model(7 + depth, 3, 6);
    const auto utts = make_utts(11 + depth, 1, depth, depth);
    BeamConfig cfg;
    cfg.beam = 1;
    for (int d = 0; d < depth; ++d) cfg.beam *= 3;
    cfg.nbest = cfg.beam;
    cfg.fusion = {0.3, 0.3};
    cfg.check_pruning = true;
    const DecodeResult oracle = testing::exhaustive_oracle(model, utts[0], cfg);
    const DecodeResult scalar = decode_scalar_reference(model, utts[0], cfg);
    expect_same_results(scalar, oracle, 1e-9);
    const auto vec = decode_batch_vectorized(model, utts, cfg);
    expect_same_results(vec[0], oracle, 1e-9);
  }
}

TEST(Engines, ExhaustiveOptimumBeatsGreedy) {
  const SyntheticModel model = make_model(19, 3, 6);
  const auto utts = make_utts(23, 1, 2, 2);
  BeamConfig cfg;
  cfg.beam = 9;
  cfg.nbest = 1;
  cfg.fusion = {0.0, 0.0};
  const DecodeResult best = testing::exhaustive_oracle(model, utts[0], cfg);
  BeamConfig greedy_cfg = cfg;
  greedy_cfg.beam = 1;
  const DecodeResult greedy =
      decode_scalar_reference(model, utts[0], greedy_cfg);
  EXPECT_GE(best.nbest[0].final_score, greedy.nbest[0].final_score - 1e-12);
}

TEST(Engines, VectorizedMatchesScalarAcrossConfigs) {
  // A quick slice of the full 200-seed acceptance sweep.
  int case_id = 0;
  for (std::int32_t vocab : {5, 12}) {
    for (std::int32_t beam : {1, 2, 4, 20}) {
      for (double lambda : {0.0, 0.3}) {
        for (double kappa : {0.0, 0.3}) {
          ++case_id;
          const SyntheticModel model = make_model(900 + case_id, vocab);
          const auto utts = make_utts(1300 + case_id, 1, 8, 24);
          BeamConfig cfg;
          cfg.beam = beam;
          cfg.nbest = std::min<std::int32_t>(beam, 4);
          cfg.fusion = {lambda, kappa};
          cfg.check_pruning = true;
          const DecodeResult scalar =
              decode_scalar_reference(model, utts[0], cfg);
          const auto vec = decode_batch_vectorized(model, utts, cfg);
          expect_same_results(vec[0], scalar, 1e-9);
        }
      }
    }
  }
}

TEST(Engines, BatchInvariance) {
  const SyntheticModel model = make_model(3, 16);
  const auto utts = make_utts(77, 8, 6, 30);
  BeamConfig cfg;
  cfg.beam = 8;
  cfg.nbest = 3;
  const auto batched = decode_batch_vectorized(model, utts, cfg);
  for (std::size_t s = 0; s < utts.size(); ++s) {
    const auto solo = decode_batch_vectorized(
        model, std::span<const ScoreMatrix>(&utts[s], 1), cfg);
    expect_same_results(batched[s], solo[0], 1e-6);
  }
}

TEST(Engines, IdenticalUtterancesDecodeIdentically) {
  const SyntheticModel model = make_model(5, 10);
  const auto one = make_utts(9, 1, 12, 12);
  std::vector<ScoreMatrix> batch(8, one[0]);
  BeamConfig cfg;
  cfg.beam = 4;
  cfg.nbest = 2;
  const auto results = decode_batch_vectorized(model, batch, cfg);
  for (std::size_t s = 1; s < batch.size(); ++s) {
    ASSERT_EQ(results[s].nbest.size(), results[0].nbest.size());
    for (std::size_t i = 0; i < results[0].nbest.size(); ++i) {
      ASSERT_EQ(results[s].nbest[i].labels, results[0].nbest[i].labels);
      ASSERT_EQ(results[s].nbest[i].score, results[0].nbest[i].score);
    }
  }
}

TEST(Engines, ScoreBreakdownTelescopes) {
  // alpha must equal the weighted component totals for every hypothesis.
  const SyntheticModel model = make_model(13, 14);
  const auto utts = make_utts(17, 2, 10, 18);
  BeamConfig cfg;
  cfg.beam = 6;
  cfg.nbest = 6;
  cfg.fusion = {0.3, 0.3};
  const auto results = decode_batch_vectorized(model, utts, cfg);
  for (const auto& res : results) {
    for (const Hypothesis& h : res.nbest) {
      const double recombined = cfg.fusion.ctc_weight * h.ctc_total +
                                (1.0 - cfg.fusion.ctc_weight) * h.att_total +
                                cfg.fusion.lm_weight * h.lm_total;
      ASSERT_NEAR(h.score, recombined, 1e-9);
      ASSERT_LE(h.score, 1e-12);  // all per-step fused deltas are <= 0
    }
  }
}

TEST(Engines, AlphaMonotoneOverSteps) {
  const SyntheticModel model = make_model(21, 12);
  const auto utts = make_utts(29, 1, 16, 16);
  BeamConfig cfg;
  cfg.beam = 5;
  cfg.nbest = 1;
  BatchBeamDecoder decoder(model, utts, cfg);
  double prev_best = 0.0;
  while (!decoder.done()) {
    decoder.step();
    double best = kNegInf;
    for (std::size_t i = 0; i < decoder.alpha().size(); ++i) {
      if (decoder.active()[i]) best = std::max(best, decoder.alpha()[i]);
    }
    if (best == kNegInf) break;  // everything finalized
    ASSERT_LE(best, prev_best + 1e-12);
    prev_best = best;
  }
}

TEST(Engines, StepAfterCompletionIsNoOp) {
  const SyntheticModel model = make_model(33, 8);
  const auto utts = make_utts(37, 1, 6, 6);
  BeamConfig cfg;
  cfg.beam = 2;
  cfg.nbest = 1;
  BatchBeamDecoder decoder(model, utts, cfg);
  while (!decoder.done()) decoder.step();
  const auto labels_before = decoder.label_histories();
  const auto alpha_before = decoder.alpha();
  decoder.step();  // all slots inactive: must not touch histories
  EXPECT_EQ(decoder.label_histories(), labels_before);
  EXPECT_EQ(decoder.alpha(), alpha_before);
}

TEST(Engines, InactiveSlotsCarryNegInf) {
  const SyntheticModel model = make_model(41, 10);
  const auto utts = make_utts(43, 1, 10, 10);
  BeamConfig cfg;
  cfg.beam = 6;
  cfg.nbest = 1;
  BatchBeamDecoder decoder(model, utts, cfg);
  while (!decoder.done()) {
    decoder.step();
    for (std::size_t i = 0; i < decoder.alpha().size(); ++i) {
      if (!decoder.active()[i]) ASSERT_EQ(decoder.alpha()[i], kNegInf);
    }
  }
}

TEST(Engines, EmptyBatchThrows) {
  const SyntheticModel model = make_model(1, 8);
  std::vector<ScoreMatrix> utts;
  BeamConfig cfg;
  EXPECT_THROW(decode_batch_vectorized(model, utts, cfg),
               std::invalid_argument);
}

TEST(PruneComposition, HandComputedTwoParentCase) {
  // Two active parents, |L|=3, B=2: local top-2 per parent, flat candidate
  // index b*2 + j, global top-2 over the four survivors.
  ScoreMatrix gamma = ScoreMatrix::from_values(
      2, 3, {-1.0, -2.0, -3.0,     // parent 0: best -1 (label 0), -2 (label 1)
             -0.5, -4.0, -1.5});   // parent 1: best -0.5 (label 0), -1.5 (2)
  TopK local = topk_rows(gamma, 2);
  EXPECT_EQ(local.indices(0, 0), 0);
  EXPECT_EQ(local.indices(0, 1), 1);
  EXPECT_EQ(local.indices(1, 0), 0);
  EXPECT_EQ(local.indices(1, 1), 2);
  // Accumulated parent scores: 0 each, so totals mirror the local values.
  ScoreMatrix flat = reshape(std::move(local.values), 1, 4);
  TopK global = topk_rows(flat, 2);
  // Survivor 0: flat 2 -> parent 1, rank 0 -> label 0 at -0.5.
  // Survivor 1: flat 0 -> parent 0, rank 0 -> label 0 at -1.0.
  EXPECT_EQ(global.indices(0, 0), 2);
  EXPECT_EQ(global.indices(0, 1), 0);
  EXPECT_EQ(global.indices(0, 0) / 2, 1);
  EXPECT_EQ(local.indices(global.indices(0, 0) / 2, global.indices(0, 0) % 2),
            0);
  EXPECT_EQ(global.values(0, 0), -0.5);
  EXPECT_EQ(global.values(0, 1), -1.0);
}

TEST(Finalize, EqualScoresShorterFirst) {
  NBestPool pool(3);
  Hypothesis a;
  a.labels = {1, 2, 3};
  a.final_score = -1.0;
  Hypothesis b;
  b.labels = {1, 2};
  b.final_score = -1.0;
  pool.offer(std::move(a));
  pool.offer(std::move(b));
  ASSERT_EQ(pool.items()[0].labels.size(), 2u);
  ASSERT_EQ(pool.items()[1].labels.size(), 3u);
}

TEST(Finalize, LexicographicTieBreak) {
  NBestPool pool(2);
  Hypothesis a;
  a.labels = {2, 1};
  a.final_score = -1.0;
  Hypothesis b;
  b.labels = {1, 2};
  b.final_score = -1.0;
  pool.offer(std::move(a));
  pool.offer(std::move(b));
  ASSERT_EQ(pool.items()[0].labels, (std::vector<Label>{1, 2}));
}

TEST(Finalize, TruncatedPadsAfterFinished) {
  NBestPool finished(3), truncated(3);
  Hypothesis f;
  f.labels = {1};
  f.final_score = -5.0;
  finished.offer(std::move(f));
  Hypothesis t;
  t.labels = {2};
  t.final_score = -1.0;  // better score, still ranked after finished
  t.truncated = true;
  truncated.offer(std::move(t));
  BeamConfig cfg;
  cfg.beam = 4;
  cfg.nbest = 2;
  const DecodeResult r = assemble_result(finished, truncated, cfg, 1, 0.0);
  ASSERT_EQ(r.nbest.size(), 2u);
  EXPECT_FALSE(r.nbest[0].truncated);
  EXPECT_TRUE(r.nbest[1].truncated);
}

TEST(Finalize, EmptyPoolsAreAnInternalError) {
  NBestPool finished(1), truncated(1);
  BeamConfig cfg;
  EXPECT_THROW(assemble_result(finished, truncated, cfg, 0, 0.0),
               std::logic_error);
}

TEST(Finalize, LengthPenaltyShiftsRanking) {
  const SyntheticModel model = make_model(55, 10);
  const auto utts = make_utts(59, 1, 12, 12);
  BeamConfig cfg;
  cfg.beam = 4;
  cfg.nbest = 4;
  cfg.length_penalty = 0.0;
  const auto base = decode_scalar_reference(model, utts[0], cfg);
  for (const Hypothesis& h : base.nbest) {
    ASSERT_EQ(h.final_score, h.score);  // penalty off: ranking by alpha alone
  }
  cfg.length_penalty = -0.5;
  const auto penalized = decode_scalar_reference(model, utts[0], cfg);
  for (const Hypothesis& h : penalized.nbest) {
    ASSERT_NEAR(h.final_score,
                h.score - 0.5 * static_cast<double>(h.labels.size()), 1e-12);
  }
}

}  // namespace
}  // namespace vbeam

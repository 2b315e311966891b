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

#ifndef VBEAM_SYNTH_MODEL_HPP
#define VBEAM_SYNTH_MODEL_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vbeam/matrix.hpp"
#include "vbeam/rng.hpp"
#include "vbeam/vocab.hpp"

namespace vbeam {

struct SyntheticModelSpec {
  std::uint64_t seed = 0;
  std::int32_t d_feat = 1;
  std::int32_t d_enc = 1;
  std::int32_t d_dec = 1;
  std::int32_t d_lm = 1;
  std::int32_t vocab_size = 3;  // |L|

  void validate() const {
    if (d_feat < 1 || d_enc < 1 || d_dec < 1 || d_lm < 1) {
      throw std::invalid_argument("SyntheticModelSpec: dims must be >= 1");
    }
    if (vocab_size < 3) {
      throw std::invalid_argument("SyntheticModelSpec: |L| must be >= 3");
    }
  }
};

/// Seed-derived stand-in for the trained encoder/decoder/LM/CTC networks.
///
/// All weights come from one SplitMix64 stream seeded with spec.seed, each
/// matrix filled row-major, in this fixed order:
///   encoder:   enc_w [d_enc, d_feat], enc_b [d_enc]
///   CTC head:  ctc_w [|L|+1, d_enc], ctc_b [|L|+1]
///   decoder:   dec_emb [|L|, d_dec], dec_rr [d_dec, d_dec],
///              dec_rc [d_dec, d_enc], dec_rb [d_dec]
///   attention: att_proj [d_enc, d_dec]
///   output:    gen_w [|L|, d_dec + d_enc], gen_b [|L|]
///   LM:        lm_emb [|L|, d_lm], lm_hh [d_lm, d_lm], lm_hb [d_lm],
///              lm_out [|L|, d_lm], lm_ob [|L|]
/// Weight values are draws in [-0.1, 0.1).
struct SyntheticModel {
  SyntheticModelSpec spec;
  Vocabulary vocab;

  ScoreMatrix enc_w, ctc_w, dec_emb, dec_rr, dec_rc, att_proj, gen_w, lm_emb,
      lm_hh, lm_out;
  std::vector<double> enc_b, ctc_b, dec_rb, gen_b, lm_hb, lm_ob;
};

inline SyntheticModel generate_model(const SyntheticModelSpec& spec) {
  spec.validate();
  const std::size_t L = spec.vocab_size;
  const std::size_t de = spec.d_enc;
  const std::size_t dd = spec.d_dec;
  const std::size_t dl = spec.d_lm;
  const std::size_t df = spec.d_feat;

  SyntheticModel m;
  m.spec = spec;
  m.vocab = Vocabulary(spec.vocab_size);

  SplitMix64 rng(spec.seed);
  auto mat = [&rng](std::size_t r, std::size_t c) {
    ScoreMatrix w(r, c);
    rng.fill_weights({w.data(), w.size()});
    return w;
  };
  auto vec = [&rng](std::size_t n) {
    std::vector<double> b(n);
    rng.fill_weights(b);
    return b;
  };

  m.enc_w = mat(de, df);
  m.enc_b = vec(de);
  m.ctc_w = mat(L + 1, de);
  m.ctc_b = vec(L + 1);
  m.dec_emb = mat(L, dd);
  m.dec_rr = mat(dd, dd);
  m.dec_rc = mat(dd, de);
  m.dec_rb = vec(dd);
  m.att_proj = mat(de, dd);
  m.gen_w = mat(L, dd + de);
  m.gen_b = vec(L);
  m.lm_emb = mat(L, dl);
  m.lm_hh = mat(dl, dl);
  m.lm_hb = vec(dl);
  m.lm_out = mat(L, dl);
  m.lm_ob = vec(L);
  return m;
}

struct UtteranceSetSpec {
  std::uint64_t seed = 0;
  std::int32_t count = 1;       // S_total
  std::int32_t t_min = 1;
  std::int32_t t_max = 1;
  std::int32_t d_feat = 1;

  void validate() const {
    if (count < 1) {
      throw std::invalid_argument("UtteranceSetSpec: count must be >= 1");
    }
    if (t_min < 1 || t_min > t_max) {
      throw std::invalid_argument("UtteranceSetSpec: need 1 <= T_min <= T_max");
    }
    if (d_feat < 1) {
      throw std::invalid_argument("UtteranceSetSpec: d_feat must be >= 1");
    }
  }
};

struct UtteranceSet {
  UtteranceSetSpec spec;
  std::vector<ScoreMatrix> features;  // per utterance [T_i, d_feat]
};

/// Per utterance, in order: draw T_i uniformly from [T_min, T_max]
/// (seed stream modulo the span), then fill the [T_i, d_feat] feature
/// matrix row-major with draws in [-1, 1).
inline UtteranceSet generate_utterances(const UtteranceSetSpec& spec) {
  spec.validate();
  UtteranceSet set;
  set.spec = spec;
  set.features.reserve(spec.count);
  SplitMix64 rng(spec.seed);
  for (std::int32_t i = 0; i < spec.count; ++i) {
    const std::size_t t = rng.next_range(spec.t_min, spec.t_max);
    ScoreMatrix f(t, spec.d_feat);
    rng.fill_features({f.data(), f.size()});
    set.features.push_back(std::move(f));
  }
  return set;
}

}  // namespace vbeam

#endif  // VBEAM_SYNTH_MODEL_HPP

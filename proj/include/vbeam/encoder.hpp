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

#ifndef VBEAM_ENCODER_HPP
#define VBEAM_ENCODER_HPP

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

#include "vbeam/kernels.hpp"
#include "vbeam/matrix.hpp"
#include "vbeam/synth_model.hpp"

namespace vbeam {

/// Encoder output for one utterance, padded to the batch maximum length.
/// Rows at t >= frames are padding: hidden rows are zero, ctc_logprobs rows
/// are -inf, and nothing downstream may let them influence a score.
struct EncoderOutput {
  std::size_t frames = 0;   // valid frame count T_enc
  ScoreMatrix hidden;       // [T_max, d_enc]
  ScoreMatrix ctc_logprobs; // [T_max, |L|+1], valid rows log-normalized
};

/// Runs the encoder stub over a batch: per valid frame an affine map plus
/// tanh, and a separate affine + log-softmax CTC head of width |L|+1.
/// Batching never changes values; every utterance is encoded exactly as it
/// would be alone, padding aside.
inline std::vector<EncoderOutput> encode_batch(
    const SyntheticModel& model, std::span<const ScoreMatrix> utterances) {
  if (utterances.empty()) {
    throw std::invalid_argument("encode_batch: empty batch");
  }
  std::size_t t_max = 0;
  for (const ScoreMatrix& u : utterances) {
    if (u.rows() == 0) {
      throw std::invalid_argument("encode_batch: zero-frame utterance");
    }
    if (u.cols() != static_cast<std::size_t>(model.spec.d_feat)) {
      throw std::invalid_argument("encode_batch: feature width mismatch");
    }
    t_max = std::max(t_max, u.rows());
  }

  const std::size_t d_enc = model.spec.d_enc;
  const std::size_t ctc_dim = model.spec.vocab_size + 1;
  std::vector<EncoderOutput> out;
  out.reserve(utterances.size());
  for (const ScoreMatrix& u : utterances) {
    EncoderOutput enc;
    enc.frames = u.rows();
    enc.hidden = ScoreMatrix(t_max, d_enc, 0.0);
    enc.ctc_logprobs = ScoreMatrix(t_max, ctc_dim, kNegInf);
    for (std::size_t t = 0; t < u.rows(); ++t) {
      std::span<double> h = enc.hidden.row(t);
      seq_affine(model.enc_w, model.enc_b, u.row(t), h);
      tanh_inplace(h);
      std::span<double> c = enc.ctc_logprobs.row(t);
      seq_affine(model.ctc_w, model.ctc_b, h, c);
      log_softmax_inplace(c);
    }
    out.push_back(std::move(enc));
  }
  return out;
}

inline EncoderOutput encode_one(const SyntheticModel& model,
                                const ScoreMatrix& utterance) {
  return std::move(
      encode_batch(model, std::span<const ScoreMatrix>(&utterance, 1))[0]);
}

}  // namespace vbeam

#endif  // VBEAM_ENCODER_HPP

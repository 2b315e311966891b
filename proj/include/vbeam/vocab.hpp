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

#ifndef VBEAM_VOCAB_HPP
#define VBEAM_VOCAB_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vbeam {

using Label = std::int32_t;

/// Output label set L. sos/eos live inside L; the CTC blank sits one past
/// the end (index |L|) and is only ever seen by the CTC head.
struct Vocabulary {
  std::int32_t size = 0;  // |L|
  Label sos_id = 0;
  Label eos_id = 1;

  Vocabulary() = default;
  explicit Vocabulary(std::int32_t vocab_size, Label sos = 0, Label eos = 1)
      : size(vocab_size), sos_id(sos), eos_id(eos) {
    if (size < 3) {
      throw std::invalid_argument("Vocabulary: need |L| >= 3, got " +
                                  std::to_string(size));
    }
    if (sos_id == eos_id || sos_id < 0 || eos_id < 0 || sos_id >= size ||
        eos_id >= size) {
      throw std::invalid_argument("Vocabulary: bad sos/eos ids");
    }
  }

  Label blank_id() const { return size; }
};

}  // namespace vbeam

#endif  // VBEAM_VOCAB_HPP

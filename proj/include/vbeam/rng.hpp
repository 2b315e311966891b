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

#ifndef VBEAM_RNG_HPP
#define VBEAM_RNG_HPP

#include <cstdint>
#include <span>

namespace vbeam {

/// SplitMix64. Fully specified, trivially portable, and independent of any
/// standard library engine, so generated artifacts are identical across
/// implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// value / 2^64 in [0, 1).
  double next_unit() { return static_cast<double>(next_u64()) * 0x1.0p-64; }

  /// Weight draw in [-0.1, 0.1).
  double next_weight() { return -0.1 + 0.2 * next_unit(); }

  /// Feature draw in [-1, 1).
  double next_feature() { return -1.0 + 2.0 * next_unit(); }

  /// Uniform integer in [lo, hi] (inclusive).
  std::uint64_t next_range(std::uint64_t lo, std::uint64_t hi) {
    return lo + next_u64() % (hi - lo + 1);
  }

  void fill_weights(std::span<double> out) {
    for (double& v : out) v = next_weight();
  }

  void fill_features(std::span<double> out) {
    for (double& v : out) v = next_feature();
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace vbeam

#endif  // VBEAM_RNG_HPP

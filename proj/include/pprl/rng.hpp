// Copyright 2026 The embbin-pprl Authors
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

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace pprl {

// Portable, bit-exact randomness. Two database owners running on different
// machines must derive identical q-gram selections, so nothing here depends
// on <random> distributions (whose output is implementation-defined).

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// FNV-1a over raw bytes, starting from `basis`.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t basis = kFnvOffsetBasis) noexcept {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

/// The SplitMix64 output function applied to a single value: equal to the
/// first draw of a SplitMix64 stream seeded with `x`.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  std::uint64_t z = x + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    const std::uint64_t out = mix64(state_);
    state_ += 0x9e3779b97f4a7c15ULL;
    return out;
  }

  /// Value in [0, bound). Plain modulo reduction; the bias is irrelevant for
  /// the bounds used here and keeps the stream trivially reproducible.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept { return next() % bound; }

  /// Uniform double in [0, 1) built from the top 53 bits.
  constexpr double unit() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

/// Named sub-seed derived from a master seed: mix64(master ^ fnv1a64(name)).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view name) noexcept {
  return mix64(master ^ fnv1a64(name));
}

/// Selects `k` distinct positions from [0, n) by a partial Fisher-Yates
/// shuffle of the identity permutation:
///   for i in [0, k): j = i + rng.below(n - i); swap(perm[i], perm[j])
/// and returns perm[0..k) in selection order. Requires k <= n.
std::vector<std::uint32_t> select_distinct(SplitMix64& rng, std::uint32_t n, std::uint32_t k);

}  // namespace pprl

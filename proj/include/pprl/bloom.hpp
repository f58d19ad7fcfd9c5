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
#include <string>
#include <string_view>
#include <vector>

#include "pprl/bitvec.hpp"
#include "pprl/encoder.hpp"
#include "pprl/prep.hpp"

namespace pprl {

// Bloom filter q-gram encoding, the usual baseline for bit-vector record
// linkage. Positions use double hashing:
//   pos_i(g) = (h1(g) + i * h2(g)) mod l_bf,  i in [0, k_hash)
// with 64-bit wrap-around arithmetic before the reduction and
//   h1(g) = FNV-1a-64 of g with offset basis (kFnvOffsetBasis ^ seed)
//   h2(g) = FNV-1a-64 of g with offset basis kBloomAltBasis, low bit forced on.

inline constexpr std::uint64_t kBloomAltBasis = 0x84222325cbf29ce4ULL;

struct BloomConfig {
  int l_bf = 1000;
  int k_hash = 15;
  std::uint64_t seed = 0;

  void validate() const;
};

/// The k_hash positions of one gram, in hash order (may repeat).
std::vector<std::size_t> bf_positions(std::string_view gram, const BloomConfig& cfg);

BitVector bf_encode(std::span<const std::string> qgrams, const BloomConfig& cfg);

EncodedDatabase bf_encode_database(const QGramIndex& qgram_index, const BloomConfig& cfg);

}  // namespace pprl

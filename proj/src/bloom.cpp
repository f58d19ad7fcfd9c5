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

#include "pprl/bloom.hpp"

#include "pprl/error.hpp"
#include "pprl/rng.hpp"

namespace pprl {

void BloomConfig::validate() const {
  if (l_bf < 1) throw ConfigError("Bloom filter length must be >= 1");
  if (k_hash < 1) throw ConfigError("Bloom filter hash count must be >= 1");
}

std::vector<std::size_t> bf_positions(std::string_view gram, const BloomConfig& cfg) {
  cfg.validate();
  const std::uint64_t h1 = fnv1a64(gram, kFnvOffsetBasis ^ cfg.seed);
  const std::uint64_t h2 = fnv1a64(gram, kBloomAltBasis) | 1ULL;
  const auto modulus = static_cast<std::uint64_t>(cfg.l_bf);
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(cfg.k_hash));
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(cfg.k_hash); ++i) {
    out.push_back(static_cast<std::size_t>((h1 + i * h2) % modulus));
  }
  return out;
}

BitVector bf_encode(std::span<const std::string> qgrams, const BloomConfig& cfg) {
  cfg.validate();
  BitVector filter(static_cast<std::size_t>(cfg.l_bf));
  for (const auto& g : qgrams) {
    for (auto p : bf_positions(g, cfg)) filter.set(p);
  }
  return filter;
}

EncodedDatabase bf_encode_database(const QGramIndex& qgram_index, const BloomConfig& cfg) {
  cfg.validate();
  EncodedDatabase out;
  out.l_f = static_cast<std::size_t>(cfg.l_bf);
  out.entries.reserve(qgram_index.entries.size());
  for (const auto& e : qgram_index.entries) out.entries.push_back({e.id, bf_encode(e.grams, cfg)});
  return out;
}

}  // namespace pprl

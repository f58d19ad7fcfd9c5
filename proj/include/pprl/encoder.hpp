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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pprl/binarizer.hpp"
#include "pprl/bitvec.hpp"
#include "pprl/prep.hpp"

namespace pprl {

struct EncodeConfig {
  int k = 15;
  int l = 1000;
  int l_f = 1000;
  std::uint64_t global_seed = 0;

  /// Enforces 1 <= k <= l_f <= l.
  void validate() const;
};

/// Per-q-gram temporary strings t of length l_f.
struct TempBinaryIndex {
  std::size_t l_f = 0;
  std::unordered_map<std::string, BitVector> entries;

  /// Throws LookupError naming the gram.
  const BitVector& at(std::string_view gram) const;

  friend bool operator==(const TempBinaryIndex&, const TempBinaryIndex&) = default;
};

struct EncodedRecord {
  std::string id;
  BitVector bits;

  friend bool operator==(const EncodedRecord&, const EncodedRecord&) = default;
};

/// Final record bit vectors in dataset order.
struct EncodedDatabase {
  std::size_t l_f = 0;
  std::vector<EncodedRecord> entries;

  friend bool operator==(const EncodedDatabase&, const EncodedDatabase&) = default;
};

struct BlockingScheme {
  enum class Kind : std::uint8_t { kNone = 0, kSoundexFull = 1, kSoundexPrefix = 2 };

  Kind kind = Kind::kSoundexFull;
  /// Prefix length for kSoundexPrefix.
  std::uint32_t prefix = 0;

  static BlockingScheme none() { return {Kind::kNone, 0}; }
  static BlockingScheme soundex_full() { return {Kind::kSoundexFull, 0}; }
  static BlockingScheme soundex_prefix(std::uint32_t n) { return {Kind::kSoundexPrefix, n}; }

  /// Accepts "none", "soundex_full", "soundex_prefix:N" and "soundex_prefix(N)".
  static BlockingScheme parse(std::string_view text);
  std::string to_string() const;

  /// Wire tag: kind in the low byte, prefix length above it.
  std::uint32_t tag() const noexcept { return static_cast<std::uint32_t>(kind) | (prefix << 8); }
  static BlockingScheme from_tag(std::uint32_t tag);

  friend bool operator==(const BlockingScheme&, const BlockingScheme&) = default;
};

/// Encoded records bucketed by blocking key. Bucket lists are sorted by id.
struct Blocks {
  std::uint32_t l_f = 0;
  std::uint32_t k = 0;
  BlockingScheme scheme;
  std::map<std::string, std::vector<EncodedRecord>> buckets;

  std::size_t record_count() const noexcept;

  friend bool operator==(const Blocks&, const Blocks&) = default;
};

/// Stage-1 source positions for a gram: k distinct positions in [0, l) from a
/// SplitMix64 stream seeded with fnv1a64(gram) ^ global_seed.
std::vector<std::uint32_t> source_positions(std::string_view qgram, const EncodeConfig& cfg);

/// Stage-2 destinations (only used when l > l_f): k distinct positions in
/// [0, l_f) from a stream seeded with mix64(alphabet index) ^ global_seed.
std::vector<std::uint32_t> destination_positions(std::size_t alphabet_index, const EncodeConfig& cfg);

/// Copies row bits at `sources` into a fresh vector of length l_f. With no
/// destinations the bits stay at their source positions (requires
/// l == l_f); otherwise source i lands on destinations[i].
BitVector apply_selection(const BitVector& row, std::span<const std::uint32_t> sources,
                          std::span<const std::uint32_t> destinations, std::size_t l_f);

/// Temporary binary string of one gram.
BitVector gen_temp_binary(const QGramAlphabet& alphabet, const QGramBitMatrix& bits, std::string_view qgram,
                          const EncodeConfig& cfg);

TempBinaryIndex build_temp_index(const QGramAlphabet& alphabet, const QGramBitMatrix& bits,
                                 const EncodeConfig& cfg);

/// Bitwise OR; an empty list yields the all-zero vector.
BitVector gen_final_binary(std::span<const BitVector> qgram_binaries, std::size_t l_f);

/// One final vector per record; empty q-gram lists encode to all zeros.
EncodedDatabase encode_database(const QGramIndex& qgram_index, const TempBinaryIndex& temp, std::size_t l_f);

/// American Soundex of the letters in `word` (non-letters ignored); "" when
/// `word` has no letters.
std::string soundex(std::string_view word);

/// Blocking key of a normalized value. Values without any letter map to the
/// sentinel "Z000"; scheme none maps everything to "".
std::string blocking_key(std::string_view value, const BlockingScheme& scheme);

/// Throws ConsistencyError unless encoded and dataset cover the same ids.
Blocks gen_blocks(const EncodedDatabase& encoded, const Dataset& dataset, const BlockingScheme& scheme,
                  std::uint32_t k);

/// Encoded-blocks wire format, little-endian:
///   "PPRLENC1" | u32 l_f | u32 k | u32 scheme tag | u32 bucket count
///   per bucket: u32 key length, key bytes, u32 record count
///   per record: u32 id length, id bytes, ceil(l_f / 8) packed bytes
std::vector<std::uint8_t> blocks_to_bytes(const Blocks& blocks);
Blocks blocks_from_bytes(std::span<const std::uint8_t> bytes, const std::string& source,
                         std::optional<std::uint32_t> expected_l_f = std::nullopt);
void serialize_blocks(const Blocks& blocks, const std::filesystem::path& path);
Blocks deserialize_blocks(const std::filesystem::path& path,
                          std::optional<std::uint32_t> expected_l_f = std::nullopt);

}  // namespace pprl

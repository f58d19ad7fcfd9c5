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

#include "pprl/encoder.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_set>

#include "pprl/error.hpp"
#include "pprl/io.hpp"
#include "pprl/rng.hpp"

namespace pprl {

namespace {

constexpr std::string_view kBlocksMagic = "PPRLENC1";
constexpr std::string_view kNoLetterKey = "Z000";

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

// Soundex digit, '0' for vowels (a e i o u y), 'h' for the transparent h/w.
char soundex_digit(char c) {
  switch (lower(c)) {
    case 'b': case 'f': case 'p': case 'v': return '1';
    case 'c': case 'g': case 'j': case 'k': case 'q': case 's': case 'x': case 'z': return '2';
    case 'd': case 't': return '3';
    case 'l': return '4';
    case 'm': case 'n': return '5';
    case 'r': return '6';
    case 'h': case 'w': return 'h';
    default: return '0';
  }
}

// First maximal run of letters.
std::string_view leading_alpha_run(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size() && !is_letter(s[b])) ++b;
  std::size_t e = b;
  while (e < s.size() && is_letter(s[e])) ++e;
  return s.substr(b, e - b);
}

}  // namespace

void EncodeConfig::validate() const {
  if (k < 1 || k > l_f || l_f > l) {
    throw ConfigError("encoding needs 1 <= k <= l_f <= l, got k=" + std::to_string(k) +
                      " l_f=" + std::to_string(l_f) + " l=" + std::to_string(l));
  }
}

const BitVector& TempBinaryIndex::at(std::string_view gram) const {
  const auto it = entries.find(std::string(gram));
  if (it == entries.end()) throw LookupError("no temporary binary string for q-gram '" + std::string(gram) + "'");
  return it->second;
}

BlockingScheme BlockingScheme::parse(std::string_view text) {
  if (text == "none") return none();
  if (text == "soundex_full" || text == "soundex") return soundex_full();
  constexpr std::string_view kPrefix = "soundex_prefix";
  if (text.substr(0, kPrefix.size()) == kPrefix) {
    std::string_view rest = text.substr(kPrefix.size());
    if (!rest.empty() && (rest.front() == ':' || rest.front() == '(')) {
      const bool paren = rest.front() == '(';
      rest.remove_prefix(1);
      if (paren) {
        if (rest.empty() || rest.back() != ')') rest = {};
        else rest.remove_suffix(1);
      }
      std::uint32_t n = 0;
      const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), n);
      if (ec == std::errc() && ptr == rest.data() + rest.size() && n > 0) return soundex_prefix(n);
    }
  }
  throw ConfigError("unknown blocking scheme '" + std::string(text) +
                    "' (expected none, soundex_full or soundex_prefix:N)");
}

std::string BlockingScheme::to_string() const {
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kSoundexFull: return "soundex_full";
    case Kind::kSoundexPrefix: return "soundex_prefix:" + std::to_string(prefix);
  }
  return "none";
}

BlockingScheme BlockingScheme::from_tag(std::uint32_t tag) {
  const auto kind = tag & 0xffU;
  const auto prefix = tag >> 8;
  if (kind == 0 && prefix == 0) return none();
  if (kind == 1 && prefix == 0) return soundex_full();
  if (kind == 2 && prefix > 0) return soundex_prefix(prefix);
  throw ParseError(ParseError::Kind::kInvalidField, "invalid blocking scheme tag " + std::to_string(tag));
}

std::size_t Blocks::record_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [key, recs] : buckets) n += recs.size();
  return n;
}

std::vector<std::uint32_t> source_positions(std::string_view qgram, const EncodeConfig& cfg) {
  SplitMix64 rng(fnv1a64(qgram) ^ cfg.global_seed);
  return select_distinct(rng, static_cast<std::uint32_t>(cfg.l), static_cast<std::uint32_t>(cfg.k));
}

std::vector<std::uint32_t> destination_positions(std::size_t alphabet_index, const EncodeConfig& cfg) {
  SplitMix64 rng(mix64(alphabet_index) ^ cfg.global_seed);
  return select_distinct(rng, static_cast<std::uint32_t>(cfg.l_f), static_cast<std::uint32_t>(cfg.k));
}

BitVector apply_selection(const BitVector& row, std::span<const std::uint32_t> sources,
                          std::span<const std::uint32_t> destinations, std::size_t l_f) {
  BitVector t(l_f);
  if (destinations.empty()) {
    if (row.size() != l_f) {
      throw ShapeError("selection without destinations needs l == l_f (" + std::to_string(row.size()) +
                       " vs " + std::to_string(l_f) + ")");
    }
    for (auto p : sources) {
      if (p >= row.size()) throw ShapeError("selected position outside the bit row");
      if (row.test(p)) t.set(p);
    }
    return t;
  }
  if (destinations.size() != sources.size()) throw ShapeError("source and destination counts differ");
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i] >= row.size() || destinations[i] >= l_f) throw ShapeError("selected position out of range");
    if (row.test(sources[i])) t.set(destinations[i]);
  }
  return t;
}

namespace {

BitVector temp_binary_at(const QGramAlphabet& alphabet, const QGramBitMatrix& bits, std::size_t index,
                         const EncodeConfig& cfg) {
  const auto& gram = alphabet[index];
  const auto sources = source_positions(gram, cfg);
  const auto l_f = static_cast<std::size_t>(cfg.l_f);
  if (cfg.l == cfg.l_f) return apply_selection(bits.rows[index], sources, {}, l_f);
  const auto destinations = destination_positions(index, cfg);
  return apply_selection(bits.rows[index], sources, destinations, l_f);
}

void check_bits(const QGramAlphabet& alphabet, const QGramBitMatrix& bits, const EncodeConfig& cfg) {
  cfg.validate();
  if (bits.rows.size() != alphabet.size()) {
    throw ShapeError("bit matrix has " + std::to_string(bits.rows.size()) + " rows but the alphabet has " +
                     std::to_string(alphabet.size()) + " q-grams");
  }
  if (bits.l != static_cast<std::size_t>(cfg.l)) {
    throw ShapeError("bit matrix width " + std::to_string(bits.l) + " differs from l = " + std::to_string(cfg.l));
  }
}

}  // namespace

BitVector gen_temp_binary(const QGramAlphabet& alphabet, const QGramBitMatrix& bits, std::string_view qgram,
                          const EncodeConfig& cfg) {
  check_bits(alphabet, bits, cfg);
  return temp_binary_at(alphabet, bits, alphabet.index_of(qgram), cfg);
}

TempBinaryIndex build_temp_index(const QGramAlphabet& alphabet, const QGramBitMatrix& bits,
                                 const EncodeConfig& cfg) {
  check_bits(alphabet, bits, cfg);
  TempBinaryIndex out;
  out.l_f = static_cast<std::size_t>(cfg.l_f);
  out.entries.reserve(alphabet.size());
  for (std::size_t i = 0; i < alphabet.size(); ++i) out.entries.emplace(alphabet[i], temp_binary_at(alphabet, bits, i, cfg));
  return out;
}

BitVector gen_final_binary(std::span<const BitVector> qgram_binaries, std::size_t l_f) {
  BitVector b(l_f);
  for (const auto& t : qgram_binaries) b |= t;
  return b;
}

EncodedDatabase encode_database(const QGramIndex& qgram_index, const TempBinaryIndex& temp, std::size_t l_f) {
  if (temp.l_f != l_f) throw ShapeError("temporary index length differs from l_f");
  EncodedDatabase out;
  out.l_f = l_f;
  out.entries.reserve(qgram_index.entries.size());
  for (const auto& entry : qgram_index.entries) {
    BitVector b(l_f);
    for (const auto& g : entry.grams) {
      const auto it = temp.entries.find(g);
      if (it == temp.entries.end()) {
        throw LookupError("q-gram '" + g + "' of record '" + entry.id + "' has no temporary binary string");
      }
      b |= it->second;
    }
    out.entries.push_back({entry.id, std::move(b)});
  }
  return out;
}

std::string soundex(std::string_view word) {
  std::string code;
  char last = 0;
  for (char c : word) {
    if (!is_letter(c)) continue;
    const char digit = soundex_digit(c);
    if (code.empty()) {
      code += static_cast<char>(lower(c) - 'a' + 'A');
      last = digit;
      continue;
    }
    if (digit == 'h') continue;  // h and w do not separate equal codes
    if (digit == '0') {
      last = '0';
      continue;
    }
    if (digit != last) code += digit;
    last = digit;
    if (code.size() == 4) break;
  }
  if (code.empty()) return code;
  code.resize(4, '0');
  return code;
}

std::string blocking_key(std::string_view value, const BlockingScheme& scheme) {
  std::string_view source;
  switch (scheme.kind) {
    case BlockingScheme::Kind::kNone: return "";
    case BlockingScheme::Kind::kSoundexFull: source = value; break;
    case BlockingScheme::Kind::kSoundexPrefix: source = value.substr(0, scheme.prefix); break;
  }
  const auto code = soundex(leading_alpha_run(source));
  return code.empty() ? std::string(kNoLetterKey) : code;
}

Blocks gen_blocks(const EncodedDatabase& encoded, const Dataset& dataset, const BlockingScheme& scheme,
                  std::uint32_t k) {
  std::unordered_map<std::string_view, std::string_view> value_of;
  value_of.reserve(dataset.records.size());
  for (const auto& r : dataset.records) value_of.emplace(r.id, r.value);
  if (value_of.size() != encoded.entries.size()) {
    throw ConsistencyError("encoded database has " + std::to_string(encoded.entries.size()) +
                           " records but the dataset has " + std::to_string(value_of.size()));
  }
  Blocks blocks;
  blocks.l_f = static_cast<std::uint32_t>(encoded.l_f);
  blocks.k = k;
  blocks.scheme = scheme;
  for (const auto& e : encoded.entries) {
    const auto it = value_of.find(e.id);
    if (it == value_of.end()) throw ConsistencyError("encoded record '" + e.id + "' is not in the dataset");
    blocks.buckets[blocking_key(it->second, scheme)].push_back(e);
  }
  for (auto& [key, recs] : blocks.buckets) {
    std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  }
  return blocks;
}

std::vector<std::uint8_t> blocks_to_bytes(const Blocks& blocks) {
  io::ByteWriter w;
  w.raw(kBlocksMagic);
  w.u32(blocks.l_f);
  w.u32(blocks.k);
  w.u32(blocks.scheme.tag());
  w.u32(static_cast<std::uint32_t>(blocks.buckets.size()));
  for (const auto& [key, recs] : blocks.buckets) {
    w.str(key);
    w.u32(static_cast<std::uint32_t>(recs.size()));
    for (const auto& r : recs) {
      if (r.bits.size() != blocks.l_f) {
        throw ShapeError("record '" + r.id + "' has " + std::to_string(r.bits.size()) + " bits, expected l_f = " +
                         std::to_string(blocks.l_f));
      }
      w.str(r.id);
      w.bytes(r.bits.to_bytes());
    }
  }
  return w.buffer();
}

Blocks blocks_from_bytes(std::span<const std::uint8_t> bytes, const std::string& source,
                         std::optional<std::uint32_t> expected_l_f) {
  io::ByteReader r(bytes, source);
  io::expect_magic(r, kBlocksMagic);
  Blocks blocks;
  blocks.l_f = r.u32();
  if (expected_l_f && *expected_l_f != blocks.l_f) {
    throw ParseError(ParseError::Kind::kLengthMismatch,
                     source + ": l_f is " + std::to_string(blocks.l_f) + ", expected " + std::to_string(*expected_l_f));
  }
  blocks.k = r.u32();
  try {
    blocks.scheme = BlockingScheme::from_tag(r.u32());
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), source + ": " + e.what());
  }
  const auto bucket_count = r.u32();
  const std::size_t row_bytes = (blocks.l_f + 7) / 8;
  std::unordered_set<std::string> ids;
  for (std::uint32_t b = 0; b < bucket_count; ++b) {
    std::string key = r.str();
    const auto count = r.u32();
    auto [it, inserted] = blocks.buckets.try_emplace(std::move(key));
    if (!inserted) throw ParseError(ParseError::Kind::kInvalidField, source + ": duplicate bucket key");
    auto& recs = it->second;
    for (std::uint32_t i = 0; i < count; ++i) {
      EncodedRecord rec;
      rec.id = r.str();
      try {
        rec.bits = BitVector::from_bytes(r.bytes(row_bytes), blocks.l_f);
      } catch (const ShapeError& e) {
        throw ParseError(ParseError::Kind::kInvalidField, source + ": " + e.what());
      }
      if (!ids.insert(rec.id).second) {
        throw ParseError(ParseError::Kind::kInvalidField, source + ": duplicate record id '" + rec.id + "'");
      }
      recs.push_back(std::move(rec));
    }
  }
  if (r.remaining() != 0) throw ParseError(ParseError::Kind::kTrailingData, source + ": trailing bytes");
  return blocks;
}

void serialize_blocks(const Blocks& blocks, const std::filesystem::path& path) {
  io::write_file(path, blocks_to_bytes(blocks));
}

Blocks deserialize_blocks(const std::filesystem::path& path, std::optional<std::uint32_t> expected_l_f) {
  return blocks_from_bytes(io::read_file(path), path.string(), expected_l_f);
}

}  // namespace pprl

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
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pprl {

/// Character class a database is normalized to. The canonical order is
/// 'a'..'z' followed by '0'..'9'.
class CharClass {
 public:
  enum class Kind { kLetters, kDigits, kMix };

  constexpr CharClass() = default;
  constexpr explicit CharClass(Kind kind) : kind_(kind) {}

  /// Parses "letters", "digits" or "mix"; throws ConfigError otherwise.
  static CharClass parse(std::string_view name);

  Kind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;
  /// Class characters in canonical order.
  std::string_view chars() const noexcept;
  std::size_t size() const noexcept { return chars().size(); }
  bool contains(char c) const noexcept;

  friend bool operator==(CharClass, CharClass) = default;

 private:
  Kind kind_ = Kind::kLetters;
};

struct Record {
  std::string id;
  std::string value;

  friend bool operator==(const Record&, const Record&) = default;
};

struct Dataset {
  std::string source_name;
  std::vector<std::string> linkage_columns;
  std::vector<Record> records;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// All (l_c)^q possible q-grams of a character class in canonical
/// lexicographic order, plus the inverse lookup.
class QGramAlphabet {
 public:
  QGramAlphabet() = default;
  QGramAlphabet(CharClass char_class, int q);

  int q() const noexcept { return q_; }
  CharClass char_class() const noexcept { return char_class_; }
  std::size_t size() const noexcept { return grams_.size(); }
  const std::vector<std::string>& grams() const noexcept { return grams_; }
  const std::string& operator[](std::size_t i) const { return grams_[i]; }

  bool contains(std::string_view gram) const;
  /// Position of `gram`; throws LookupError naming the gram when absent.
  std::size_t index_of(std::string_view gram) const;

 private:
  int q_ = 0;
  CharClass char_class_;
  std::vector<std::string> grams_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct QGramEntry {
  std::string id;
  std::vector<std::string> grams;
};

/// Per-record q-gram lists in dataset order. Lists keep extraction order and
/// duplicates.
struct QGramIndex {
  std::vector<QGramEntry> entries;
};

struct CsvOptions {
  char delimiter = ',';
  /// Inserted between linkage columns before normalization.
  std::string separator;
};

/// Reads a header-first CSV. Each record value is the normalized
/// concatenation of `linkage_columns` in the given order.
/// Throws DataError (kMissingFile, kMissingColumn, kDuplicateId, kMalformedRow).
Dataset load_csv(const std::filesystem::path& path, std::string_view id_column,
                 const std::vector<std::string>& linkage_columns, CharClass char_class,
                 const CsvOptions& options = {});

/// Writes `id,value` rows with a header, quoting where needed.
void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Splits one CSV line honouring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line, char delimiter);

/// Lowercases and drops every character outside `char_class`.
std::string normalize_value(std::string_view raw, CharClass char_class);

/// Throws ConfigError when q < 1.
QGramAlphabet gen_all_possible_qgrams(CharClass char_class, int q);

/// Sliding window of width q, stride 1, no padding.
std::vector<std::string> gen_qgram_list(std::string_view value, int q);

struct PreparedDatabase {
  QGramAlphabet alphabet;
  QGramIndex index;
};

/// Builds the alphabet and the per-record q-gram index. Records too short to
/// yield a q-gram get an empty list and a logged warning.
PreparedDatabase prepare_database(const Dataset& dataset, int q, CharClass char_class);

/// Applies max(1, round(rate * |value|)) random single-character edits to
/// each record. The stream for a record is seeded by mix64(seed ^ fnv1a64(id)),
/// so output depends only on (dataset, rate, seed).
Dataset corrupt_dataset(const Dataset& dataset, double rate, std::uint64_t seed,
                        CharClass char_class);

}  // namespace pprl

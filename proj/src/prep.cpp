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

#include "pprl/prep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "pprl/error.hpp"
#include "pprl/rng.hpp"

namespace pprl {

namespace {

constexpr std::string_view kLetters = "abcdefghijklmnopqrstuvwxyz";
constexpr std::string_view kDigits = "0123456789";
constexpr std::string_view kMix = "abcdefghijklmnopqrstuvwxyz0123456789";

bool is_lower_letter(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::string quote_csv(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

CharClass CharClass::parse(std::string_view name) {
  if (name == "letters") return CharClass(Kind::kLetters);
  if (name == "digits") return CharClass(Kind::kDigits);
  if (name == "mix") return CharClass(Kind::kMix);
  throw ConfigError("unsupported character class '" + std::string(name) +
                    "' (expected letters, digits or mix)");
}

std::string_view CharClass::name() const noexcept {
  switch (kind_) {
    case Kind::kLetters: return "letters";
    case Kind::kDigits: return "digits";
    case Kind::kMix: return "mix";
  }
  return "letters";
}

std::string_view CharClass::chars() const noexcept {
  switch (kind_) {
    case Kind::kLetters: return kLetters;
    case Kind::kDigits: return kDigits;
    case Kind::kMix: return kMix;
  }
  return kLetters;
}

bool CharClass::contains(char c) const noexcept {
  switch (kind_) {
    case Kind::kLetters: return is_lower_letter(c);
    case Kind::kDigits: return is_digit(c);
    case Kind::kMix: return is_lower_letter(c) || is_digit(c);
  }
  return false;
}

QGramAlphabet::QGramAlphabet(CharClass char_class, int q) : q_(q), char_class_(char_class) {
  if (q < 1) throw ConfigError("q-gram length must be at least 1, got " + std::to_string(q));
  const std::string_view chars = char_class.chars();
  const std::size_t base = chars.size();
  std::size_t total = 1;
  for (int i = 0; i < q; ++i) {
    if (total > (std::size_t{1} << 26) / base) {
      throw ConfigError("alphabet of " + std::to_string(base) + "^" + std::to_string(q) +
                        " q-grams is too large");
    }
    total *= base;
  }
  grams_.reserve(total);
  // Odometer over positions; the last character varies fastest.
  std::vector<std::size_t> digits(static_cast<std::size_t>(q), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::string gram(static_cast<std::size_t>(q), ' ');
    for (std::size_t p = 0; p < digits.size(); ++p) gram[p] = chars[digits[p]];
    grams_.push_back(std::move(gram));
    for (std::size_t p = digits.size(); p-- > 0;) {
      if (++digits[p] < base) break;
      digits[p] = 0;
    }
  }
  index_.reserve(total);
  for (std::size_t i = 0; i < grams_.size(); ++i) index_.emplace(grams_[i], i);
}

bool QGramAlphabet::contains(std::string_view gram) const {
  return index_.find(std::string(gram)) != index_.end();
}

std::size_t QGramAlphabet::index_of(std::string_view gram) const {
  const auto it = index_.find(std::string(gram));
  if (it == index_.end()) {
    throw LookupError("q-gram '" + std::string(gram) + "' is not in the " +
                      std::string(char_class_.name()) + " alphabet (q=" + std::to_string(q_) + ")");
  }
  return it->second;
}

std::vector<std::string> split_csv_line(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string normalize_value(std::string_view raw, CharClass char_class) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    const char lc = ascii_lower(c);
    if (char_class.contains(lc)) out += lc;
  }
  return out;
}

Dataset load_csv(const std::filesystem::path& path, std::string_view id_column,
                 const std::vector<std::string>& linkage_columns, CharClass char_class,
                 const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Kind::kMissingFile, "cannot open CSV file " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(DataError::Kind::kMalformedRow, path.string() + ": missing header row");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line, options.delimiter);
  auto column_index = [&](std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError(DataError::Kind::kMissingColumn,
                      path.string() + ": column '" + std::string(name) + "' not in header");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_idx = column_index(id_column);
  std::vector<std::size_t> value_idx;
  for (const auto& col : linkage_columns) value_idx.push_back(column_index(col));

  Dataset ds;
  ds.source_name = path.filename().string();
  ds.linkage_columns = linkage_columns;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line, options.delimiter);
    if (fields.size() != header.size()) {
      throw DataError(DataError::Kind::kMalformedRow,
                      path.string() + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " fields, got " +
                          std::to_string(fields.size()));
    }
    Record rec;
    rec.id = fields[id_idx];
    if (rec.id.empty()) {
      throw DataError(DataError::Kind::kMalformedRow,
                      path.string() + ":" + std::to_string(line_no) + ": empty record id");
    }
    if (!seen.insert(rec.id).second) {
      throw DataError(DataError::Kind::kDuplicateId,
                      path.string() + ": duplicate record id '" + rec.id + "'");
    }
    std::string raw;
    for (std::size_t i = 0; i < value_idx.size(); ++i) {
      if (i > 0) raw += options.separator;
      raw += fields[value_idx[i]];
    }
    rec.value = normalize_value(raw, char_class);
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataError::Kind::kIo, "cannot write " + path.string());
  out << "id,value\n";
  for (const auto& r : dataset.records) out << quote_csv(r.id) << ',' << quote_csv(r.value) << '\n';
  if (!out) throw DataError(DataError::Kind::kIo, "write failed for " + path.string());
}

QGramAlphabet gen_all_possible_qgrams(CharClass char_class, int q) {
  return QGramAlphabet(char_class, q);
}

std::vector<std::string> gen_qgram_list(std::string_view value, int q) {
  std::vector<std::string> grams;
  if (q < 1 || value.size() < static_cast<std::size_t>(q)) return grams;
  const auto width = static_cast<std::size_t>(q);
  grams.reserve(value.size() - width + 1);
  for (std::size_t i = 0; i + width <= value.size(); ++i) grams.emplace_back(value.substr(i, width));
  return grams;
}

PreparedDatabase prepare_database(const Dataset& dataset, int q, CharClass char_class) {
  if (dataset.records.empty()) throw DataError(DataError::Kind::kMalformedRow, "dataset is empty");
  PreparedDatabase out{gen_all_possible_qgrams(char_class, q), {}};
  out.index.entries.reserve(dataset.records.size());
  for (const auto& rec : dataset.records) {
    auto grams = gen_qgram_list(rec.value, q);
    if (grams.empty()) {
      spdlog::warn("record '{}' yields no {}-grams (value '{}'); it will encode to all zeros",
                   rec.id, q, rec.value);
    }
    for (const auto& g : grams) {
      if (!out.alphabet.contains(g)) {
        throw LookupError("record '" + rec.id + "' contains q-gram '" + g +
                          "' outside the alphabet; was it normalized with another class?");
      }
    }
    out.index.entries.push_back({rec.id, std::move(grams)});
  }
  return out;
}

Dataset corrupt_dataset(const Dataset& dataset, double rate, std::uint64_t seed,
                        CharClass char_class) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw ConfigError("corruption rate must lie in [0, 1], got " + std::to_string(rate));
  }
  const std::string_view chars = char_class.chars();
  Dataset out = dataset;
  for (auto& rec : out.records) {
    if (rec.value.empty()) {
      spdlog::warn("record '{}' has an empty value; copied without corruption", rec.id);
      continue;
    }
    SplitMix64 rng(mix64(seed ^ fnv1a64(rec.id)));
    const auto edits = std::max<long>(1, std::lround(rate * static_cast<double>(rec.value.size())));
    std::string& v = rec.value;
    for (long e = 0; e < edits; ++e) {
      auto op = rng.below(3);
      if (v.empty()) op = 1;
      if (op == 0) {  // substitute with a different class character
        const auto pos = rng.below(v.size());
        const auto orig = chars.find(v[pos]);
        auto pick = rng.below(chars.size() - 1);
        if (orig != std::string_view::npos && pick >= orig) ++pick;
        v[pos] = chars[pick];
      } else if (op == 1) {
        const auto pos = rng.below(v.size() + 1);
        v.insert(v.begin() + static_cast<std::ptrdiff_t>(pos), chars[rng.below(chars.size())]);
      } else {
        const auto pos = rng.below(v.size());
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(pos));
      }
    }
  }
  return out;
}

}  // namespace pprl

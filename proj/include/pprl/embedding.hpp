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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pprl/prep.hpp"

namespace pprl {

enum class CorpusMode {
  /// The alphabet in canonical order as a single token sequence.
  kAlphabetOrder,
  /// Each record's q-gram list is one sentence.
  kRecordLists,
};

CorpusMode parse_corpus_mode(std::string_view name);
std::string_view corpus_mode_name(CorpusMode mode);

struct CbowConfig {
  int dim = 300;
  int min_freq = 1;
  int window = 5;
  int epochs = 5;
  double learning_rate = 0.025;
  int negative_samples = 5;
  std::uint64_t seed = 1;
  CorpusMode corpus_mode = CorpusMode::kAlphabetOrder;

  /// Throws ConfigError if any bound is violated.
  void validate() const;
};

/// CBOW network weights. Row i of both matrices belongs to vocab()[i].
class CbowModel {
 public:
  CbowModel() = default;
  CbowModel(int dim, std::vector<std::string> vocab);

  int dim() const noexcept { return dim_; }
  std::size_t vocab_size() const noexcept { return vocab_.size(); }
  const std::vector<std::string>& vocab() const noexcept { return vocab_; }
  bool contains(std::string_view token) const;
  /// Throws LookupError naming the token.
  std::size_t row_of(std::string_view token) const;

  std::span<double> input_row(std::size_t row);
  std::span<const double> input_row(std::size_t row) const;
  std::span<double> output_row(std::size_t row);
  std::span<const double> output_row(std::size_t row) const;

  const std::vector<double>& input_vectors() const noexcept { return input_; }
  const std::vector<double>& output_vectors() const noexcept { return output_; }

  bool all_finite() const;

  friend bool operator==(const CbowModel& a, const CbowModel& b) {
    return a.dim_ == b.dim_ && a.vocab_ == b.vocab_ && a.input_ == b.input_ && a.output_ == b.output_;
  }

 private:
  int dim_ = 0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::size_t> rows_;
  std::vector<double> input_;
  std::vector<double> output_;
};

/// One training example: the context rows predict `target`; `negatives`
/// are noise rows (any equal to `target` are ignored).
struct CbowSample {
  std::vector<std::size_t> context;
  std::size_t target = 0;
  std::vector<std::size_t> negatives;
};

struct CbowGradient {
  double loss = 0.0;
  std::map<std::size_t, std::vector<double>> input_rows;
  std::map<std::size_t, std::vector<double>> output_rows;
};

/// Negative-sampling loss -log s(h.u_t) - sum_n log s(-h.u_n), where h is the
/// mean of the context input vectors.
double cbow_sample_loss(const CbowModel& model, const CbowSample& sample);
/// Exact gradient of cbow_sample_loss with respect to every touched row.
CbowGradient cbow_sample_gradient(const CbowModel& model, const CbowSample& sample);
/// One plain gradient-descent step on a single sample; returns the pre-step loss.
double cbow_apply_step(CbowModel& model, const CbowSample& sample, double learning_rate);

/// Trains CBOW with negative sampling. `sentences` is only consulted for
/// CorpusMode::kRecordLists. The vocabulary is the alphabet grams whose
/// corpus frequency reaches min_freq, kept in alphabet order.
CbowModel train_cbow(const QGramAlphabet& alphabet, const CbowConfig& cfg,
                     std::span<const std::vector<std::string>> sentences = {});

/// Per-q-gram vectors aligned with the alphabet order.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t rows, int dim) : rows_(rows), dim_(dim), data_(rows * static_cast<std::size_t>(dim)) {}

  std::size_t size() const noexcept { return rows_; }
  int dim() const noexcept { return dim_; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)}; }
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t rows_ = 0;
  int dim_ = 0;
  std::vector<double> data_;
};

/// Input-vector row of `qgram`; throws LookupError for unknown grams.
std::span<const double> embed_qgram(const CbowModel& model, std::string_view qgram);

EmbeddingTable embed_all(const CbowModel& model, const QGramAlphabet& alphabet);

/// "PPRLCB1", u32 d, u32 vocab size, tokens (u32 length + bytes), then the
/// input and output matrices row-major as little-endian f64.
void save_model(const CbowModel& model, const std::filesystem::path& path);
CbowModel load_model(const std::filesystem::path& path);
std::vector<std::uint8_t> model_to_bytes(const CbowModel& model);
CbowModel model_from_bytes(std::span<const std::uint8_t> bytes, const std::string& source);

}  // namespace pprl

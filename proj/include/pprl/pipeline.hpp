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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pprl/binarizer.hpp"
#include "pprl/bloom.hpp"
#include "pprl/embedding.hpp"
#include "pprl/encoder.hpp"
#include "pprl/linkage.hpp"
#include "pprl/prep.hpp"

namespace pprl {

enum class EncoderKind { kEmbBin, kBloom };

/// Every parameter both database owners and the linkage unit agree on.
/// Stored as `key = value` lines; `#` starts a comment.
struct PipelineConfig {
  // data
  std::string char_class = "letters";
  int q = 2;
  std::string id_col = "id";
  std::vector<std::string> cols = {"value"};
  char delimiter = ',';
  std::string separator;
  std::string left_path;
  std::string right_path;
  double corrupt_rate = 0.2;
  // embedding
  int dim = 300;
  int window = 5;
  int min_freq = 1;
  int cbow_epochs = 5;
  double cbow_lr = 0.025;
  int negatives = 5;
  std::string corpus_mode = "alphabet_order";
  // binarizer
  int l = 1000;
  int ep = 5;
  int batch = 75;
  double bin_lr = 1e-3;
  double lambda = 1e-3;
  // encoding
  std::string encoder = "embbin";
  int k = 15;
  int l_f = 1000;
  std::string block_scheme = "soundex_full";
  int bf_l = 1000;
  int bf_k_hash = 15;
  // linkage
  double threshold = 0.8;
  std::uint64_t max_pairs = 1000000;
  unsigned threads = 1;
  std::string truth_mode = "dice";
  std::uint64_t master_seed = 42;

  /// Throws ConfigError; includes the l > (l_c)^q requirement.
  void validate() const;

  CharClass char_class_value() const { return CharClass::parse(char_class); }
  EncoderKind encoder_kind() const;
  CbowConfig cbow_config() const;
  BinarizerConfig binarizer_config() const;
  EncodeConfig encode_config() const;
  BloomConfig bloom_config() const;
  LinkConfig link_config() const;
  BlockingScheme blocking_scheme() const { return BlockingScheme::parse(block_scheme); }
  CsvOptions csv_options() const { return {delimiter, separator}; }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Parses config text; unknown keys, duplicate keys and malformed values
/// raise ConfigError. The result is validated.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const PipelineConfig& config);

/// Stage sub-seeds: derive_seed(master_seed, <name>) for names "cbow",
/// "binarizer", "encode", "bloom" and "corrupt".
std::uint64_t stage_seed(const PipelineConfig& config, std::string_view stage);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

/// Everything a database owner derives from the agreed config before seeing
/// its own records (with corpus_mode alphabet_order).
struct EncodingArtifacts {
  QGramAlphabet alphabet;
  CbowModel model;
  EmbeddingTable table;
  BinarizerState binarizer;
  QGramBitMatrix bits;
  TempBinaryIndex temp;
};

/// Trains embedding and binarizer, then builds the temporary index.
/// `sentences` feeds CBOW only in record_lists mode.
EncodingArtifacts build_artifacts(const PipelineConfig& config,
                                  std::span<const std::vector<std::string>> sentences = {},
                                  std::vector<StageTiming>* timings = nullptr);

/// Encodes and blocks one dataset with the configured encoder. `artifacts`
/// is required for the embbin encoder and ignored by bf.
Blocks encode_dataset(const PipelineConfig& config, const Dataset& dataset, const EncodingArtifacts* artifacts,
                      std::vector<StageTiming>* timings = nullptr);

struct DoReport {
  std::vector<StageTiming> stages;
  double total_seconds = 0.0;
  Blocks blocks;
};

/// prepare -> train-embed -> binarize -> encode (or encode-bf), then writes
/// the encoded-blocks file to out_path. Errors carry the failing stage name.
DoReport run_do_pipeline(const PipelineConfig& config, const std::filesystem::path& dataset_path,
                         const std::filesystem::path& out_path);

struct LuReport {
  LinkResult result;
  std::optional<Metrics> metrics;
  double link_seconds = 0.0;
};

/// Links two encoded-blocks files, writes the matches CSV and, when the
/// config names both plaintext datasets, evaluates and writes metrics.
LuReport run_lu_pipeline(const std::filesystem::path& left_file, const std::filesystem::path& right_file,
                         const PipelineConfig& config, const std::filesystem::path& matches_path,
                         const std::optional<std::filesystem::path>& metrics_path = std::nullopt);

/// `count` first names drawn from a built-in pool, ids "r0000"...
Dataset synthetic_names(std::size_t count, std::uint64_t seed);

struct DemoRow {
  std::string encoder;
  double threshold = 0.0;
  Metrics metrics;
  std::size_t matches = 0;
  std::uint64_t pairs_compared = 0;

  friend bool operator==(const DemoRow& a, const DemoRow& b) {
    return a.encoder == b.encoder && a.threshold == b.threshold && a.matches == b.matches &&
           a.pairs_compared == b.pairs_compared && a.metrics.tp == b.metrics.tp && a.metrics.fp == b.metrics.fp &&
           a.metrics.fn == b.metrics.fn && a.metrics.tn == b.metrics.tn;
  }
};

struct DemoReport {
  std::size_t records = 0;
  std::vector<DemoRow> rows;
  std::vector<StageTiming> timings;
  double total_seconds = 0.0;

  std::string markdown() const;
};

/// Synthetic dataset vs its corrupted copy, both encoders, thresholds
/// 0.8 / 0.9 / 1.0, evaluated against plaintext Dice on compared pairs.
DemoReport run_demo(const PipelineConfig& config, std::size_t records = 1000);

}  // namespace pprl

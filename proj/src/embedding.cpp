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

#include "pprl/embedding.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "pprl/error.hpp"
#include "pprl/io.hpp"
#include "pprl/rng.hpp"

namespace pprl {

namespace {

constexpr std::string_view kModelMagic = "PPRLCB1";

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> context_mean(const CbowModel& model, const CbowSample& sample) {
  std::vector<double> h(static_cast<std::size_t>(model.dim()), 0.0);
  for (auto c : sample.context) {
    const auto row = model.input_row(c);
    for (std::size_t j = 0; j < h.size(); ++j) h[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(sample.context.size());
  for (auto& v : h) v *= inv;
  return h;
}

void check_sample(const CbowModel& model, const CbowSample& sample) {
  if (sample.context.empty()) throw ConfigError("CBOW sample has an empty context");
  auto in_range = [&](std::size_t r) { return r < model.vocab_size(); };
  if (!in_range(sample.target) || !std::all_of(sample.context.begin(), sample.context.end(), in_range) ||
      !std::all_of(sample.negatives.begin(), sample.negatives.end(), in_range)) {
    throw LookupError("CBOW sample refers to a row outside the vocabulary");
  }
}

// Cumulative unigram^0.75 distribution for negative draws.
class NoiseDistribution {
 public:
  explicit NoiseDistribution(const std::vector<std::size_t>& counts) {
    double total = 0.0;
    cumulative_.reserve(counts.size());
    for (auto c : counts) {
      total += std::pow(static_cast<double>(c), 0.75);
      cumulative_.push_back(total);
    }
  }

  std::size_t draw(SplitMix64& rng) const {
    const double u = rng.unit() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace

CorpusMode parse_corpus_mode(std::string_view name) {
  if (name == "alphabet_order") return CorpusMode::kAlphabetOrder;
  if (name == "record_lists") return CorpusMode::kRecordLists;
  throw ConfigError("unknown corpus mode '" + std::string(name) +
                    "' (expected alphabet_order or record_lists)");
}

std::string_view corpus_mode_name(CorpusMode mode) {
  return mode == CorpusMode::kAlphabetOrder ? "alphabet_order" : "record_lists";
}

void CbowConfig::validate() const {
  if (dim < 1) throw ConfigError("embedding dimension must be >= 1");
  if (window < 1) throw ConfigError("window must be >= 1");
  if (min_freq < 1) throw ConfigError("min_freq must be >= 1");
  if (negative_samples < 1) throw ConfigError("negative_samples must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("CBOW learning rate must be positive and finite");
  }
}

CbowModel::CbowModel(int dim, std::vector<std::string> vocab)
    : dim_(dim),
      vocab_(std::move(vocab)),
      input_(vocab_.size() * static_cast<std::size_t>(dim), 0.0),
      output_(vocab_.size() * static_cast<std::size_t>(dim), 0.0) {
  rows_.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!rows_.emplace(vocab_[i], i).second) {
      throw ConfigError("duplicate vocabulary token '" + vocab_[i] + "'");
    }
  }
}

bool CbowModel::contains(std::string_view token) const { return rows_.count(std::string(token)) != 0; }

std::size_t CbowModel::row_of(std::string_view token) const {
  const auto it = rows_.find(std::string(token));
  if (it == rows_.end()) throw LookupError("q-gram '" + std::string(token) + "' is not in the CBOW vocabulary");
  return it->second;
}

std::span<double> CbowModel::input_row(std::size_t row) {
  return {input_.data() + row * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
}
std::span<const double> CbowModel::input_row(std::size_t row) const {
  return {input_.data() + row * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
}
std::span<double> CbowModel::output_row(std::size_t row) {
  return {output_.data() + row * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
}
std::span<const double> CbowModel::output_row(std::size_t row) const {
  return {output_.data() + row * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
}

bool CbowModel::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(input_.begin(), input_.end(), finite) &&
         std::all_of(output_.begin(), output_.end(), finite);
}

double cbow_sample_loss(const CbowModel& model, const CbowSample& sample) {
  check_sample(model, sample);
  const auto h = context_mean(model, sample);
  double loss = -log_sigmoid(dot(h, model.output_row(sample.target)));
  for (auto n : sample.negatives) {
    if (n == sample.target) continue;
    loss -= log_sigmoid(-dot(h, model.output_row(n)));
  }
  return loss;
}

CbowGradient cbow_sample_gradient(const CbowModel& model, const CbowSample& sample) {
  check_sample(model, sample);
  const auto d = static_cast<std::size_t>(model.dim());
  const auto h = context_mean(model, sample);
  CbowGradient grad;
  std::vector<double> grad_h(d, 0.0);

  auto accumulate = [&](std::size_t row, double label) {
    const auto u = model.output_row(row);
    const double s = dot(h, u);
    grad.loss -= label > 0.5 ? log_sigmoid(s) : log_sigmoid(-s);
    const double coeff = sigmoid(s) - label;  // dL/ds
    auto& gu = grad.output_rows.try_emplace(row, d, 0.0).first->second;
    for (std::size_t j = 0; j < d; ++j) {
      grad_h[j] += coeff * u[j];
      gu[j] += coeff * h[j];
    }
  };
  accumulate(sample.target, 1.0);
  for (auto n : sample.negatives) {
    if (n != sample.target) accumulate(n, 0.0);
  }

  const double inv = 1.0 / static_cast<double>(sample.context.size());
  for (auto c : sample.context) {
    auto& gi = grad.input_rows.try_emplace(c, d, 0.0).first->second;
    for (std::size_t j = 0; j < d; ++j) gi[j] += grad_h[j] * inv;
  }
  return grad;
}

double cbow_apply_step(CbowModel& model, const CbowSample& sample, double learning_rate) {
  const auto grad = cbow_sample_gradient(model, sample);
  for (const auto& [row, g] : grad.output_rows) {
    auto u = model.output_row(row);
    for (std::size_t j = 0; j < g.size(); ++j) u[j] -= learning_rate * g[j];
  }
  for (const auto& [row, g] : grad.input_rows) {
    auto v = model.input_row(row);
    for (std::size_t j = 0; j < g.size(); ++j) v[j] -= learning_rate * g[j];
  }
  return grad.loss;
}

CbowModel train_cbow(const QGramAlphabet& alphabet, const CbowConfig& cfg,
                     std::span<const std::vector<std::string>> sentences) {
  cfg.validate();
  if (alphabet.size() == 0) throw ConfigError("cannot train CBOW on an empty alphabet");

  // Corpus as sentences of alphabet indices.
  std::vector<std::vector<std::size_t>> corpus;
  if (cfg.corpus_mode == CorpusMode::kAlphabetOrder) {
    std::vector<std::size_t> seq(alphabet.size());
    for (std::size_t i = 0; i < seq.size(); ++i) seq[i] = i;
    corpus.push_back(std::move(seq));
  } else {
    corpus.reserve(sentences.size());
    for (const auto& sentence : sentences) {
      std::vector<std::size_t> seq;
      seq.reserve(sentence.size());
      for (const auto& g : sentence) seq.push_back(alphabet.index_of(g));
      corpus.push_back(std::move(seq));
    }
  }

  std::vector<std::size_t> freq(alphabet.size(), 0);
  for (const auto& s : corpus) {
    for (auto t : s) ++freq[t];
  }
  std::vector<std::string> vocab;
  std::vector<std::size_t> vocab_counts;
  std::vector<std::ptrdiff_t> row_for(alphabet.size(), -1);
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    if (freq[i] >= static_cast<std::size_t>(cfg.min_freq)) {
      row_for[i] = static_cast<std::ptrdiff_t>(vocab.size());
      vocab.push_back(alphabet[i]);
      vocab_counts.push_back(freq[i]);
    }
  }
  if (vocab.empty()) {
    throw ConfigError("CBOW vocabulary is empty after applying min_freq = " + std::to_string(cfg.min_freq));
  }

  CbowModel model(cfg.dim, vocab);
  SplitMix64 rng(cfg.seed);
  const double bound = 0.5 / static_cast<double>(cfg.dim);
  for (std::size_t r = 0; r < model.vocab_size(); ++r) {
    for (auto& v : model.input_row(r)) v = (2.0 * rng.unit() - 1.0) * bound;
  }

  // Map the corpus onto vocabulary rows, dropping filtered tokens.
  std::vector<std::vector<std::size_t>> rows;
  std::size_t corpus_tokens = 0;
  for (const auto& s : corpus) {
    std::vector<std::size_t> seq;
    for (auto t : s) {
      if (row_for[t] >= 0) seq.push_back(static_cast<std::size_t>(row_for[t]));
    }
    corpus_tokens += seq.size();
    rows.push_back(std::move(seq));
  }

  const NoiseDistribution noise(vocab_counts);
  const double total_steps = static_cast<double>(corpus_tokens) * cfg.epochs + 1.0;
  double processed = 0.0;
  const auto window = static_cast<std::size_t>(cfg.window);
  CbowSample sample;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (const auto& seq : rows) {
      for (std::size_t i = 0; i < seq.size(); ++i, processed += 1.0) {
        sample.context.clear();
        const std::size_t lo = i >= window ? i - window : 0;
        const std::size_t hi = std::min(seq.size(), i + window + 1);
        for (std::size_t c = lo; c < hi; ++c) {
          if (c != i) sample.context.push_back(seq[c]);
        }
        if (sample.context.empty()) continue;
        sample.target = seq[i];
        sample.negatives.clear();
        for (int n = 0; n < cfg.negative_samples; ++n) sample.negatives.push_back(noise.draw(rng));
        const double lr = cfg.learning_rate * std::max(1e-4, 1.0 - processed / total_steps);
        epoch_loss += cbow_apply_step(model, sample, lr);
      }
    }
    spdlog::debug("cbow epoch {}: mean loss {:.6f}", epoch + 1,
                  corpus_tokens > 0 ? epoch_loss / static_cast<double>(corpus_tokens) : 0.0);
  }
  if (!model.all_finite()) throw DivergenceError("CBOW training produced non-finite weights");
  return model;
}

std::span<const double> embed_qgram(const CbowModel& model, std::string_view qgram) {
  return model.input_row(model.row_of(qgram));
}

EmbeddingTable embed_all(const CbowModel& model, const QGramAlphabet& alphabet) {
  EmbeddingTable table(alphabet.size(), model.dim());
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    const auto v = embed_qgram(model, alphabet[i]);
    std::copy(v.begin(), v.end(), table.row(i).begin());
  }
  return table;
}

std::vector<std::uint8_t> model_to_bytes(const CbowModel& model) {
  io::ByteWriter w;
  w.raw(kModelMagic);
  w.u32(static_cast<std::uint32_t>(model.dim()));
  w.u32(static_cast<std::uint32_t>(model.vocab_size()));
  for (const auto& t : model.vocab()) w.str(t);
  for (double v : model.input_vectors()) w.f64(v);
  for (double v : model.output_vectors()) w.f64(v);
  return w.buffer();
}

CbowModel model_from_bytes(std::span<const std::uint8_t> bytes, const std::string& source) {
  io::ByteReader r(bytes, source);
  io::expect_magic(r, kModelMagic);
  const auto dim = r.u32();
  const auto vocab_size = r.u32();
  if (dim == 0) throw ParseError(ParseError::Kind::kLengthMismatch, source + ": zero embedding dimension");
  std::vector<std::string> vocab;
  vocab.reserve(std::min<std::size_t>(vocab_size, r.remaining()));
  for (std::uint32_t i = 0; i < vocab_size; ++i) vocab.push_back(r.str());
  CbowModel model(static_cast<int>(dim), std::move(vocab));
  for (std::size_t row = 0; row < model.vocab_size(); ++row) {
    for (auto& v : model.input_row(row)) v = r.f64();
  }
  for (std::size_t row = 0; row < model.vocab_size(); ++row) {
    for (auto& v : model.output_row(row)) v = r.f64();
  }
  if (r.remaining() != 0) throw ParseError(ParseError::Kind::kTrailingData, source + ": trailing bytes after model");
  return model;
}

void save_model(const CbowModel& model, const std::filesystem::path& path) {
  io::write_file(path, model_to_bytes(model));
}

CbowModel load_model(const std::filesystem::path& path) {
  return model_from_bytes(io::read_file(path), path.string());
}

}  // namespace pprl

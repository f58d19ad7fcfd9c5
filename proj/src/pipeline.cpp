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

#include "pprl/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "pprl/error.hpp"
#include "pprl/rng.hpp"

namespace pprl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  }
  return value;
}

double parse_double(std::string_view key, std::string_view text) {
  // from_chars for double is missing from older libstdc++; strtod is exact enough.
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto part = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!part.empty()) out.emplace_back(part);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ',';
    out += items[i];
  }
  return out;
}

// Escapes so that separator/delimiter values survive trimming.
std::string escape_char_value(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '\t') out += "\\t";
    else if (c == ' ') out += "\\s";
    else if (c == '\\') out += "\\\\";
    else out += c;
  }
  return out;
}

std::string unescape_char_value(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[++i];
      out += n == 't' ? '\t' : n == 's' ? ' ' : n;
    } else {
      out += s[i];
    }
  }
  return out;
}

struct KeyHandler {
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
KeyHandler int_key(T PipelineConfig::*field, std::string_view key) {
  return {[field, key](PipelineConfig& c, std::string_view v) { c.*field = parse_number<T>(key, v); },
          [field](const PipelineConfig& c) { return std::to_string(c.*field); }};
}

KeyHandler double_key(double PipelineConfig::*field, std::string_view key) {
  return {[field, key](PipelineConfig& c, std::string_view v) { c.*field = parse_double(key, v); },
          [field](const PipelineConfig& c) { return fmt::format("{}", c.*field); }};
}

KeyHandler string_key(std::string PipelineConfig::*field) {
  return {[field](PipelineConfig& c, std::string_view v) { c.*field = unescape_char_value(v); },
          [field](const PipelineConfig& c) { return escape_char_value(c.*field); }};
}

// Ordered so serialize_config output is stable.
const std::vector<std::pair<std::string, KeyHandler>>& key_table() {
  static const std::vector<std::pair<std::string, KeyHandler>> table = [] {
    std::vector<std::pair<std::string, KeyHandler>> t;
    t.emplace_back("char_class", string_key(&PipelineConfig::char_class));
    t.emplace_back("q", int_key(&PipelineConfig::q, "q"));
    t.emplace_back("id_col", string_key(&PipelineConfig::id_col));
    t.emplace_back("cols", KeyHandler{[](PipelineConfig& c, std::string_view v) { c.cols = split_list(v); },
                                      [](const PipelineConfig& c) { return join_list(c.cols); }});
    t.emplace_back("delimiter",
                   KeyHandler{[](PipelineConfig& c, std::string_view v) {
                                const auto s = unescape_char_value(v);
                                if (s.size() != 1) throw ConfigError("config key 'delimiter' must be one character");
                                c.delimiter = s[0];
                              },
                              [](const PipelineConfig& c) { return escape_char_value(std::string(1, c.delimiter)); }});
    t.emplace_back("separator", string_key(&PipelineConfig::separator));
    t.emplace_back("left_path", string_key(&PipelineConfig::left_path));
    t.emplace_back("right_path", string_key(&PipelineConfig::right_path));
    t.emplace_back("corrupt_rate", double_key(&PipelineConfig::corrupt_rate, "corrupt_rate"));
    t.emplace_back("dim", int_key(&PipelineConfig::dim, "dim"));
    t.emplace_back("window", int_key(&PipelineConfig::window, "window"));
    t.emplace_back("min_freq", int_key(&PipelineConfig::min_freq, "min_freq"));
    t.emplace_back("cbow_epochs", int_key(&PipelineConfig::cbow_epochs, "cbow_epochs"));
    t.emplace_back("cbow_lr", double_key(&PipelineConfig::cbow_lr, "cbow_lr"));
    t.emplace_back("negatives", int_key(&PipelineConfig::negatives, "negatives"));
    t.emplace_back("corpus_mode", string_key(&PipelineConfig::corpus_mode));
    t.emplace_back("l", int_key(&PipelineConfig::l, "l"));
    t.emplace_back("ep", int_key(&PipelineConfig::ep, "ep"));
    t.emplace_back("batch", int_key(&PipelineConfig::batch, "batch"));
    t.emplace_back("bin_lr", double_key(&PipelineConfig::bin_lr, "bin_lr"));
    t.emplace_back("lambda", double_key(&PipelineConfig::lambda, "lambda"));
    t.emplace_back("encoder", string_key(&PipelineConfig::encoder));
    t.emplace_back("k", int_key(&PipelineConfig::k, "k"));
    t.emplace_back("l_f", int_key(&PipelineConfig::l_f, "l_f"));
    t.emplace_back("block_scheme", string_key(&PipelineConfig::block_scheme));
    t.emplace_back("bf_l", int_key(&PipelineConfig::bf_l, "bf_l"));
    t.emplace_back("bf_k_hash", int_key(&PipelineConfig::bf_k_hash, "bf_k_hash"));
    t.emplace_back("threshold", double_key(&PipelineConfig::threshold, "threshold"));
    t.emplace_back("max_pairs", int_key(&PipelineConfig::max_pairs, "max_pairs"));
    t.emplace_back("threads", int_key(&PipelineConfig::threads, "threads"));
    t.emplace_back("truth_mode", string_key(&PipelineConfig::truth_mode));
    t.emplace_back("master_seed", int_key(&PipelineConfig::master_seed, "master_seed"));
    return t;
  }();
  return table;
}

// Re-raises a library error with the stage name prefixed, keeping its type.
template <typename Fn>
auto in_stage(std::string_view stage, Fn&& fn) -> decltype(fn()) {
  const auto prefix = [&](const std::exception& e) { return std::string(stage) + ": " + e.what(); };
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix(e));
  } catch (const DataError& e) {
    throw DataError(e.kind(), prefix(e));
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), prefix(e));
  } catch (const LookupError& e) {
    throw LookupError(prefix(e));
  } catch (const ShapeError& e) {
    throw ShapeError(prefix(e));
  } catch (const ConsistencyError& e) {
    throw ConsistencyError(prefix(e));
  } catch (const DivergenceError& e) {
    throw DivergenceError(prefix(e));
  } catch (const Error& e) {
    throw Error(prefix(e));
  }
}

template <typename Fn>
auto timed(std::vector<StageTiming>* timings, std::string_view stage, Fn&& fn) -> decltype(fn()) {
  const auto start = Clock::now();
  if constexpr (std::is_void_v<decltype(fn())>) {
    in_stage(stage, fn);
    if (timings != nullptr) timings->push_back({std::string(stage), seconds_since(start)});
  } else {
    auto out = in_stage(stage, fn);
    if (timings != nullptr) timings->push_back({std::string(stage), seconds_since(start)});
    return out;
  }
}

}  // namespace

EncoderKind PipelineConfig::encoder_kind() const {
  if (encoder == "embbin") return EncoderKind::kEmbBin;
  if (encoder == "bf") return EncoderKind::kBloom;
  throw ConfigError("unknown encoder '" + encoder + "' (expected embbin or bf)");
}

void PipelineConfig::validate() const {
  const CharClass cc = char_class_value();
  if (q < 1) throw ConfigError("q must be >= 1");
  if (cols.empty()) throw ConfigError("at least one linkage column is required");
  if (id_col.empty()) throw ConfigError("id_col must not be empty");
  if (!(corrupt_rate >= 0.0 && corrupt_rate <= 1.0)) throw ConfigError("corrupt_rate must lie in [0, 1]");
  encoder_kind();
  parse_corpus_mode(corpus_mode);
  blocking_scheme();
  parse_truth_mode(truth_mode);
  cbow_config().validate();
  binarizer_config().validate();
  encode_config().validate();
  bloom_config().validate();
  link_config().validate();
  double alphabet_size = 1.0;
  for (int i = 0; i < q; ++i) alphabet_size *= static_cast<double>(cc.size());
  if (!(static_cast<double>(l) > alphabet_size)) {
    throw ConfigError("l = " + std::to_string(l) + " must exceed the alphabet size (l_c)^q = " +
                      fmt::format("{}", alphabet_size));
  }
}

CbowConfig PipelineConfig::cbow_config() const {
  CbowConfig c;
  c.dim = dim;
  c.min_freq = min_freq;
  c.window = window;
  c.epochs = cbow_epochs;
  c.learning_rate = cbow_lr;
  c.negative_samples = negatives;
  c.seed = stage_seed(*this, "cbow");
  c.corpus_mode = parse_corpus_mode(corpus_mode);
  return c;
}

BinarizerConfig PipelineConfig::binarizer_config() const {
  return {l, ep, batch, bin_lr, lambda, stage_seed(*this, "binarizer")};
}

EncodeConfig PipelineConfig::encode_config() const { return {k, l, l_f, stage_seed(*this, "encode")}; }

BloomConfig PipelineConfig::bloom_config() const { return {bf_l, bf_k_hash, stage_seed(*this, "bloom")}; }

LinkConfig PipelineConfig::link_config() const { return {threshold, max_pairs, threads}; }

std::uint64_t stage_seed(const PipelineConfig& config, std::string_view stage) {
  return derive_seed(config.master_seed, stage);
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto& table = key_table();
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& kv) { return kv.first == key; });
    if (it == table.end()) throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    if (!seen.emplace(key).second) throw ConfigError("config key '" + std::string(key) + "' given twice");
    it->second.set(config, value);
  }
  config.validate();
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const PipelineConfig& config) {
  std::string out;
  for (const auto& [key, handler] : key_table()) out += key + " = " + handler.get(config) + "\n";
  return out;
}

EncodingArtifacts build_artifacts(const PipelineConfig& config, std::span<const std::vector<std::string>> sentences,
                                  std::vector<StageTiming>* timings) {
  config.validate();
  EncodingArtifacts a;
  a.alphabet = in_stage("prepare", [&] { return gen_all_possible_qgrams(config.char_class_value(), config.q); });
  timed(timings, "train-embed", [&] {
    a.model = train_cbow(a.alphabet, config.cbow_config(), sentences);
    a.table = embed_all(a.model, a.alphabet);
  });
  timed(timings, "binarize", [&] {
    const auto bcfg = config.binarizer_config();
    a.binarizer = train_binarizer(init_binarizer(bcfg.l, config.dim, bcfg.seed), a.table, bcfg);
    a.bits = binarize_alphabet(a.binarizer, a.table);
  });
  a.temp = timed(timings, "temp-index", [&] { return build_temp_index(a.alphabet, a.bits, config.encode_config()); });
  return a;
}

Blocks encode_dataset(const PipelineConfig& config, const Dataset& dataset, const EncodingArtifacts* artifacts,
                      std::vector<StageTiming>* timings) {
  const CharClass cc = config.char_class_value();
  const auto prepared = timed(timings, "prepare", [&] { return prepare_database(dataset, config.q, cc); });
  const auto scheme = config.blocking_scheme();
  if (config.encoder_kind() == EncoderKind::kBloom) {
    return timed(timings, "encode-bf", [&] {
      const auto encoded = bf_encode_database(prepared.index, config.bloom_config());
      return gen_blocks(encoded, dataset, scheme, static_cast<std::uint32_t>(config.bf_k_hash));
    });
  }
  if (artifacts == nullptr) throw ConfigError("encode: the embbin encoder needs trained artifacts");
  return timed(timings, "encode", [&] {
    const auto encoded = encode_database(prepared.index, artifacts->temp, static_cast<std::size_t>(config.l_f));
    return gen_blocks(encoded, dataset, scheme, static_cast<std::uint32_t>(config.k));
  });
}

DoReport run_do_pipeline(const PipelineConfig& config, const std::filesystem::path& dataset_path,
                         const std::filesystem::path& out_path) {
  const auto start = Clock::now();
  config.validate();
  DoReport report;
  const auto dataset = timed(&report.stages, "load", [&] {
    return load_csv(dataset_path, config.id_col, config.cols, config.char_class_value(), config.csv_options());
  });
  std::optional<EncodingArtifacts> artifacts;
  if (config.encoder_kind() == EncoderKind::kEmbBin) {
    std::vector<std::vector<std::string>> sentences;
    if (parse_corpus_mode(config.corpus_mode) == CorpusMode::kRecordLists) {
      for (const auto& r : dataset.records) sentences.push_back(gen_qgram_list(r.value, config.q));
    }
    artifacts = build_artifacts(config, sentences, &report.stages);
  }
  report.blocks = encode_dataset(config, dataset, artifacts ? &*artifacts : nullptr, &report.stages);
  timed(&report.stages, "write", [&] { serialize_blocks(report.blocks, out_path); });
  report.total_seconds = seconds_since(start);
  return report;
}

LuReport run_lu_pipeline(const std::filesystem::path& left_file, const std::filesystem::path& right_file,
                         const PipelineConfig& config, const std::filesystem::path& matches_path,
                         const std::optional<std::filesystem::path>& metrics_path) {
  const auto left = in_stage("link", [&] { return deserialize_blocks(left_file); });
  const auto right = in_stage("link", [&] { return deserialize_blocks(right_file); });
  if (left.l_f != right.l_f) {
    throw ShapeError("link: " + left_file.string() + " has l_f = " + std::to_string(left.l_f) + " but " +
                     right_file.string() + " has l_f = " + std::to_string(right.l_f));
  }
  LuReport report;
  report.result = in_stage("link", [&] { return link(left, right, config.link_config()); });
  report.link_seconds = report.result.elapsed_seconds;
  in_stage("link", [&] { write_matches_csv(report.result, matches_path); });

  if (!config.left_path.empty() && !config.right_path.empty()) {
    report.metrics = in_stage("evaluate", [&] {
      const auto cc = config.char_class_value();
      const auto a = load_csv(config.left_path, config.id_col, config.cols, cc, config.csv_options());
      const auto b = load_csv(config.right_path, config.id_col, config.cols, cc, config.csv_options());
      const auto candidates = candidate_pairs(left, right, config.max_pairs);
      const auto truth = ground_truth(a, b, config.q, parse_truth_mode(config.truth_mode), config.threshold, &candidates);
      return evaluate(report.result, truth, report.result.pairs_compared);
    });
    if (metrics_path) in_stage("evaluate", [&] { write_metrics_csv(*report.metrics, *metrics_path); });
  }
  return report;
}

Dataset synthetic_names(std::size_t count, std::uint64_t seed) {
  static constexpr std::string_view kNames[] = {
      "aaron",    "abigail",  "adam",     "adrian",   "aiden",    "alexander", "alexis",   "alice",
      "allison",  "amanda",   "amber",    "amelia",   "amy",      "andrea",    "andrew",   "angela",
      "anna",     "anthony",  "ashley",   "austin",   "barbara",  "benjamin",  "betty",    "beverly",
      "brandon",  "brenda",   "brian",    "brittany", "bruce",    "caleb",     "cameron",  "carol",
      "caroline", "catherine","charles",  "charlotte","cheryl",   "christian", "christina","christopher",
      "cynthia",  "daniel",   "david",    "deborah",  "denise",   "dennis",    "diana",    "donald",
      "donna",    "dorothy",  "douglas",  "dylan",    "edward",   "elizabeth", "emily",    "emma",
      "eric",     "ethan",    "evelyn",   "frances",  "frank",    "gabriel",   "gary",     "george",
      "gloria",   "grace",    "gregory",  "hannah",   "harold",   "heather",   "helen",    "henry",
      "isabella", "jack",     "jacob",    "jacqueline","james",   "janet",     "janice",   "jason",
      "jean",     "jeffrey",  "jennifer", "jeremy",   "jessica",  "joan",      "john",     "jonathan",
      "jordan",   "jose",     "joseph",   "joshua",   "joyce",    "judith",    "judy",     "julia",
      "julie",    "justin",   "karen",    "katherine","kathleen", "kathryn",   "kayla",    "keith",
      "kelly",    "kenneth",  "kevin",    "kimberly", "kyle",     "larry",     "laura",    "lauren",
      "lawrence", "linda",    "logan",    "lori",     "madison",  "margaret",  "maria",    "marie",
      "mark",     "martha",   "mary",     "matthew",  "megan",    "melissa",   "michael",  "michelle",
      "natalie",  "nathan",   "nicholas", "nicole",   "noah",     "olivia",    "pamela",   "patricia",
      "patrick",  "paul",     "peter",    "philip",   "rachel",   "ralph",     "raymond",  "rebecca",
      "richard",  "robert",   "roger",    "ronald",   "rose",     "russell",   "ruth",     "ryan",
      "samantha", "samuel",   "sandra",   "sara",     "sarah",    "scott",     "sean",     "sharon",
      "shirley",  "sophia",   "stephanie","stephen",  "steven",   "susan",     "teresa",   "terry",
      "thomas",   "timothy",  "tyler",    "victoria", "vincent",  "virginia",  "walter",   "wayne",
      "william",  "zachary",
  };
  constexpr std::size_t kPool = std::size(kNames);
  SplitMix64 rng(seed);
  Dataset ds;
  ds.source_name = "synthetic-first-names";
  ds.linkage_columns = {"first_name"};
  ds.records.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ds.records.push_back({fmt::format("r{:04d}", i), std::string(kNames[rng.below(kPool)])});
  }
  return ds;
}

std::string DemoReport::markdown() const {
  std::string out;
  out += fmt::format("# Linkage report\n\n{} synthetic first-name records linked against a corrupted copy.\n\n",
                     records);
  out += "| Encoder | s_t | Precision | Recall | Accuracy | F1 | TP | FP | FN | Matches | Pairs compared |\n";
  out += "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out += fmt::format("| {} | {:.1f} | {:.4f} | {:.4f} | {:.4f} | {:.4f} | {} | {} | {} | {} | {} |\n", r.encoder,
                       r.threshold, r.metrics.precision, r.metrics.recall, r.metrics.accuracy, r.metrics.f1,
                       r.metrics.tp, r.metrics.fp, r.metrics.fn, r.matches, r.pairs_compared);
  }
  out += "\n## Timings (seconds)\n\n| Stage | Seconds |\n|---|---|\n";
  for (const auto& t : timings) out += fmt::format("| {} | {:.3f} |\n", t.stage, t.seconds);
  out += fmt::format("| total | {:.3f} |\n", total_seconds);
  return out;
}

DemoReport run_demo(const PipelineConfig& config, std::size_t records) {
  const auto start = Clock::now();
  config.validate();
  DemoReport report;
  report.records = records;
  const CharClass cc = config.char_class_value();
  const auto left = synthetic_names(records, derive_seed(config.master_seed, "names"));
  const auto right = timed(&report.timings, "corrupt", [&] {
    return corrupt_dataset(left, config.corrupt_rate, stage_seed(config, "corrupt"), cc);
  });

  const auto artifacts = build_artifacts(config, {}, &report.timings);
  for (const std::string encoder : {"embbin", "bf"}) {
    PipelineConfig c = config;
    c.encoder = encoder;
    const auto blocks_a = encode_dataset(c, left, &artifacts, &report.timings);
    const auto blocks_b = encode_dataset(c, right, &artifacts, &report.timings);
    const auto candidates = candidate_pairs(blocks_a, blocks_b, c.max_pairs);
    for (const double st : {0.8, 0.9, 1.0}) {
      c.threshold = st;
      const auto result = timed(&report.timings, "link", [&] { return link(blocks_a, blocks_b, c.link_config()); });
      const auto truth = ground_truth(left, right, c.q, TruthMode::kPlaintextDice, st, &candidates);
      DemoRow row;
      row.encoder = encoder == "embbin" ? "EmbBin" : "BF";
      row.threshold = st;
      row.metrics = evaluate(result, truth, result.pairs_compared);
      row.matches = result.matches.size();
      row.pairs_compared = result.pairs_compared;
      report.rows.push_back(row);
    }
  }
  report.total_seconds = seconds_since(start);
  return report;
}

}  // namespace pprl

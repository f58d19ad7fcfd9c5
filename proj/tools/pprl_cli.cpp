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

// Command-line front end. Every subcommand starts from the built-in
// defaults, overlays an optional --config file, then applies flags.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pprl/binarizer.hpp"
#include "pprl/bloom.hpp"
#include "pprl/embedding.hpp"
#include "pprl/encoder.hpp"
#include "pprl/error.hpp"
#include "pprl/linkage.hpp"
#include "pprl/pipeline.hpp"
#include "pprl/prep.hpp"

namespace {

using pprl::PipelineConfig;

std::string config_path_from_argv(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.starts_with("--config=")) return std::string(a.substr(9));
  }
  return {};
}

void print_timing(std::string_view stage, double seconds) { fmt::print("{:<12} {:.3f} s\n", stage, seconds); }

struct Paths {
  std::string config;
  std::string input;
  std::string out;
  std::string model;
  std::string bitmatrix;
  std::string left;
  std::string right;
  std::string matches;
  std::string metrics;
  std::size_t records = 1000;
};

void add_data_options(CLI::App* cmd, PipelineConfig& cfg) {
  cmd->add_option("--id-col", cfg.id_col, "Identifier column")->capture_default_str();
  cmd->add_option("--cols", cfg.cols, "Linkage columns, concatenated in order")->delimiter(',');
  cmd->add_option("--delimiter", cfg.delimiter, "CSV field delimiter")->capture_default_str();
  cmd->add_option("--separator", cfg.separator, "Joiner between linkage columns");
}

void add_alphabet_options(CLI::App* cmd, PipelineConfig& cfg) {
  cmd->add_option("--char-class", cfg.char_class, "letters, digits or mix")->capture_default_str();
  cmd->add_option("--q", cfg.q, "q-gram length")->capture_default_str();
}

void add_seed_option(CLI::App* cmd, PipelineConfig& cfg) {
  cmd->add_option("--seed", cfg.master_seed, "Master seed; stage seeds derive from it")->capture_default_str();
}

pprl::Dataset load_input(const PipelineConfig& cfg, const std::string& path) {
  return pprl::load_csv(path, cfg.id_col, cfg.cols, cfg.char_class_value(), cfg.csv_options());
}

void cmd_prepare(const PipelineConfig& cfg, const Paths& p) {
  cfg.validate();
  const auto ds = load_input(cfg, p.input);
  const auto prepared = pprl::prepare_database(ds, cfg.q, cfg.char_class_value());
  pprl::write_dataset_csv(ds, p.out);
  std::size_t grams = 0;
  for (const auto& e : prepared.index.entries) grams += e.grams.size();
  fmt::print("records {}\nalphabet {}\nqgrams {}\n", ds.records.size(), prepared.alphabet.size(), grams);
}

void cmd_corrupt(const PipelineConfig& cfg, const Paths& p) {
  cfg.validate();
  const auto ds = load_input(cfg, p.input);
  const auto out = pprl::corrupt_dataset(ds, cfg.corrupt_rate, pprl::stage_seed(cfg, "corrupt"), cfg.char_class_value());
  pprl::write_dataset_csv(out, p.out);
  fmt::print("records {}\n", out.records.size());
}

void cmd_train_embed(const PipelineConfig& cfg, const Paths& p) {
  cfg.validate();
  const auto alphabet = pprl::gen_all_possible_qgrams(cfg.char_class_value(), cfg.q);
  std::vector<std::vector<std::string>> sentences;
  if (pprl::parse_corpus_mode(cfg.corpus_mode) == pprl::CorpusMode::kRecordLists) {
    if (p.input.empty()) throw pprl::ConfigError("--corpus-mode record_lists needs --input");
    for (const auto& r : load_input(cfg, p.input).records) sentences.push_back(pprl::gen_qgram_list(r.value, cfg.q));
  }
  const auto model = pprl::train_cbow(alphabet, cfg.cbow_config(), sentences);
  pprl::save_model(model, p.out);
  fmt::print("vocab {}\ndim {}\n", model.vocab_size(), model.dim());
}

void cmd_binarize(PipelineConfig cfg, const Paths& p) {
  const auto model = pprl::load_model(p.model);
  cfg.dim = model.dim();
  cfg.validate();
  const auto alphabet = pprl::gen_all_possible_qgrams(cfg.char_class_value(), cfg.q);
  const auto table = pprl::embed_all(model, alphabet);
  const auto bcfg = cfg.binarizer_config();
  const auto state = pprl::train_binarizer(pprl::init_binarizer(bcfg.l, model.dim(), bcfg.seed), table, bcfg);
  pprl::save_bit_matrix(pprl::binarize_alphabet(state, table), p.out);
  fmt::print("rec_loss {}\nreg_loss {}\n", state.rec_loss, state.reg_loss);
}

void cmd_encode(PipelineConfig cfg, const Paths& p) {
  const auto bits = pprl::load_bit_matrix(p.bitmatrix);
  cfg.l = static_cast<int>(bits.l);
  cfg.validate();
  const auto alphabet = pprl::gen_all_possible_qgrams(cfg.char_class_value(), cfg.q);
  if (bits.rows.size() != alphabet.size()) {
    throw pprl::ShapeError(fmt::format("{} has {} rows but the alphabet has {} q-grams", p.bitmatrix, bits.rows.size(),
                                       alphabet.size()));
  }
  if (!p.model.empty()) {
    const auto model = pprl::load_model(p.model);
    if (model.vocab() != alphabet.grams()) {
      throw pprl::ConsistencyError(p.model + " was trained on a different q-gram alphabet");
    }
  }
  pprl::EncodingArtifacts artifacts;
  artifacts.alphabet = alphabet;
  artifacts.temp = pprl::build_temp_index(alphabet, bits, cfg.encode_config());
  cfg.encoder = "embbin";
  const auto blocks = pprl::encode_dataset(cfg, load_input(cfg, p.input), &artifacts);
  pprl::serialize_blocks(blocks, p.out);
  fmt::print("records {}\nblocks {}\n", blocks.record_count(), blocks.buckets.size());
}

void cmd_encode_bf(PipelineConfig cfg, const Paths& p) {
  cfg.encoder = "bf";
  cfg.validate();
  const auto blocks = pprl::encode_dataset(cfg, load_input(cfg, p.input), nullptr);
  pprl::serialize_blocks(blocks, p.out);
  fmt::print("records {}\nblocks {}\n", blocks.record_count(), blocks.buckets.size());
}

void cmd_link(const PipelineConfig& cfg, const Paths& p) {
  cfg.link_config().validate();
  const auto a = pprl::deserialize_blocks(p.left);
  const auto b = pprl::deserialize_blocks(p.right);
  if (a.l_f != b.l_f) {
    throw pprl::ShapeError(fmt::format("{} has l_f = {} but {} has l_f = {}", p.left, a.l_f, p.right, b.l_f));
  }
  const auto result = pprl::link(a, b, cfg.link_config());
  pprl::write_matches_csv(result, p.out);
  fmt::print("pairs_compared {}\nmatches {}\n", result.pairs_compared, result.matches.size());
  print_timing("link", result.elapsed_seconds);
}

void cmd_evaluate(const PipelineConfig& cfg, const Paths& p) {
  cfg.validate();
  if (cfg.left_path.empty() || cfg.right_path.empty()) {
    throw pprl::ConfigError("evaluate needs --left-csv and --right-csv (or left_path/right_path in the config)");
  }
  const auto result = pprl::read_matches_csv(p.matches);
  const auto blocks_a = pprl::deserialize_blocks(p.left);
  const auto blocks_b = pprl::deserialize_blocks(p.right);
  const auto candidates = pprl::candidate_pairs(blocks_a, blocks_b, cfg.max_pairs);
  const auto a = load_input(cfg, cfg.left_path);
  const auto b = load_input(cfg, cfg.right_path);
  const auto truth =
      pprl::ground_truth(a, b, cfg.q, pprl::parse_truth_mode(cfg.truth_mode), cfg.threshold, &candidates);
  const auto m = pprl::evaluate(result, truth, candidates.size());
  if (!p.out.empty()) pprl::write_metrics_csv(m, p.out);
  fmt::print("tp {}\nfp {}\nfn {}\ntn {}\nprecision {:.6f}\nrecall {:.6f}\naccuracy {:.6f}\nf1 {:.6f}\n", m.tp, m.fp,
             m.fn, m.tn, m.precision, m.recall, m.accuracy, m.f1);
}

void cmd_do_pipeline(const PipelineConfig& cfg, const Paths& p) {
  const auto report = pprl::run_do_pipeline(cfg, p.input, p.out);
  for (const auto& t : report.stages) print_timing(t.stage, t.seconds);
  print_timing("total", report.total_seconds);
}

void cmd_lu_pipeline(const PipelineConfig& cfg, const Paths& p) {
  std::optional<std::filesystem::path> metrics;
  if (!p.metrics.empty()) metrics = p.metrics;
  const auto report = pprl::run_lu_pipeline(p.left, p.right, cfg, p.out, metrics);
  fmt::print("pairs_compared {}\nmatches {}\n", report.result.pairs_compared, report.result.matches.size());
  if (report.metrics) {
    const auto& m = *report.metrics;
    fmt::print("precision {:.6f}\nrecall {:.6f}\nf1 {:.6f}\n", m.precision, m.recall, m.f1);
  }
  print_timing("link", report.link_seconds);
}

void cmd_demo(const PipelineConfig& cfg, const Paths& p) {
  const auto report = pprl::run_demo(cfg, p.records);
  const auto md = report.markdown();
  if (p.out.empty()) {
    fmt::print("{}", md);
  } else {
    std::ofstream out(p.out);
    if (!out) throw pprl::DataError(pprl::DataError::Kind::kIo, "cannot write " + p.out);
    out << md;
    fmt::print("report written to {} ({:.2f} s)\n", p.out, report.total_seconds);
  }
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("pprl");
  spdlog::set_default_logger(logger);

  PipelineConfig cfg;
  Paths p;
  const std::string preset = config_path_from_argv(argc, argv);
  try {
    if (!preset.empty()) cfg = pprl::load_config(preset);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return pprl::exit_code_for(e);
  }

  CLI::App app{"Embedding-based binary encoding for privacy-preserving record linkage"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", p.config, "key = value configuration file");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto* prepare = app.add_subcommand("prepare", "Normalise a CSV and report q-gram statistics");
  prepare->add_option("--input", p.input)->required();
  prepare->add_option("--out", p.out)->required();
  add_data_options(prepare, cfg);
  add_alphabet_options(prepare, cfg);

  auto* corrupt = app.add_subcommand("corrupt", "Write a copy with seeded character edits");
  corrupt->add_option("--input", p.input)->required();
  corrupt->add_option("--out", p.out)->required();
  corrupt->add_option("--corrupt-rate", cfg.corrupt_rate)->capture_default_str();
  add_data_options(corrupt, cfg);
  add_alphabet_options(corrupt, cfg);
  add_seed_option(corrupt, cfg);

  auto* train = app.add_subcommand("train-embed", "Train CBOW q-gram embeddings");
  train->add_option("--out", p.out)->required();
  train->add_option("--input", p.input, "Dataset for record_lists corpus mode");
  train->add_option("--dim", cfg.dim)->capture_default_str();
  train->add_option("--window", cfg.window)->capture_default_str();
  train->add_option("--min-freq", cfg.min_freq)->capture_default_str();
  train->add_option("--epochs", cfg.cbow_epochs)->capture_default_str();
  train->add_option("--lr", cfg.cbow_lr)->capture_default_str();
  train->add_option("--negatives", cfg.negatives)->capture_default_str();
  train->add_option("--corpus-mode", cfg.corpus_mode)->capture_default_str();
  add_data_options(train, cfg);
  add_alphabet_options(train, cfg);
  add_seed_option(train, cfg);

  auto* binarize = app.add_subcommand("binarize", "Learn the binarizer and write the q-gram bit matrix");
  binarize->add_option("--model", p.model)->required();
  binarize->add_option("--out", p.out)->required();
  binarize->add_option("--l", cfg.l)->capture_default_str();
  binarize->add_option("--ep", cfg.ep)->capture_default_str();
  binarize->add_option("--batch", cfg.batch)->capture_default_str();
  binarize->add_option("--lambda", cfg.lambda)->capture_default_str();
  binarize->add_option("--lr", cfg.bin_lr)->capture_default_str();
  add_alphabet_options(binarize, cfg);
  add_seed_option(binarize, cfg);

  auto* encode = app.add_subcommand("encode", "Encode a dataset into blocks of final binary strings");
  encode->add_option("--input", p.input)->required();
  encode->add_option("--bitmatrix", p.bitmatrix)->required();
  encode->add_option("--model", p.model, "Checked against the alphabet when given");
  encode->add_option("--out", p.out)->required();
  encode->add_option("--k", cfg.k)->capture_default_str();
  encode->add_option("--lf", cfg.l_f)->capture_default_str();
  encode->add_option("--block-scheme", cfg.block_scheme)->capture_default_str();
  add_data_options(encode, cfg);
  add_alphabet_options(encode, cfg);
  add_seed_option(encode, cfg);

  auto* encode_bf = app.add_subcommand("encode-bf", "Encode a dataset with the Bloom filter baseline");
  encode_bf->add_option("--input", p.input)->required();
  encode_bf->add_option("--out", p.out)->required();
  encode_bf->add_option("--l", cfg.bf_l, "Bloom filter length")->capture_default_str();
  encode_bf->add_option("--k-hash", cfg.bf_k_hash)->capture_default_str();
  encode_bf->add_option("--block-scheme", cfg.block_scheme)->capture_default_str();
  add_data_options(encode_bf, cfg);
  add_alphabet_options(encode_bf, cfg);
  add_seed_option(encode_bf, cfg);

  auto* link = app.add_subcommand("link", "Compare two encoded-blocks files");
  link->add_option("--left", p.left)->required();
  link->add_option("--right", p.right)->required();
  link->add_option("--out", p.out)->required();
  link->add_option("--threshold", cfg.threshold)->capture_default_str();
  link->add_option("--max-pairs", cfg.max_pairs)->capture_default_str();
  link->add_option("--threads", cfg.threads)->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "Score a matches file against plaintext ground truth");
  evaluate->add_option("--matches", p.matches)->required();
  evaluate->add_option("--left", p.left, "Left blocks file (defines the compared pairs)")->required();
  evaluate->add_option("--right", p.right, "Right blocks file")->required();
  evaluate->add_option("--left-csv", cfg.left_path);
  evaluate->add_option("--right-csv", cfg.right_path);
  evaluate->add_option("--out", p.out, "Metrics CSV");
  evaluate->add_option("--truth-mode", cfg.truth_mode)->capture_default_str();
  evaluate->add_option("--threshold", cfg.threshold)->capture_default_str();
  evaluate->add_option("--max-pairs", cfg.max_pairs)->capture_default_str();
  add_data_options(evaluate, cfg);
  add_alphabet_options(evaluate, cfg);

  auto* do_pipe = app.add_subcommand("do-pipeline", "Database-owner side: prepare, train, binarize, encode");
  do_pipe->add_option("--input", p.input)->required();
  do_pipe->add_option("--out", p.out)->required();
  add_seed_option(do_pipe, cfg);

  auto* lu_pipe = app.add_subcommand("lu-pipeline", "Linkage-unit side: link and optionally evaluate");
  lu_pipe->add_option("--left", p.left)->required();
  lu_pipe->add_option("--right", p.right)->required();
  lu_pipe->add_option("--out", p.out)->required();
  lu_pipe->add_option("--metrics", p.metrics);
  lu_pipe->add_option("--threshold", cfg.threshold)->capture_default_str();

  auto* demo = app.add_subcommand("demo", "Synthetic end-to-end run of both encoders");
  demo->add_option("--records", p.records)->capture_default_str();
  demo->add_option("--dim", cfg.dim)->capture_default_str();
  demo->add_option("--out", p.out, "Markdown report path (stdout when omitted)");
  add_seed_option(demo, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pprl::kExitConfig;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (prepare->parsed()) cmd_prepare(cfg, p);
    else if (corrupt->parsed()) cmd_corrupt(cfg, p);
    else if (train->parsed()) cmd_train_embed(cfg, p);
    else if (binarize->parsed()) cmd_binarize(cfg, p);
    else if (encode->parsed()) cmd_encode(cfg, p);
    else if (encode_bf->parsed()) cmd_encode_bf(cfg, p);
    else if (link->parsed()) cmd_link(cfg, p);
    else if (evaluate->parsed()) cmd_evaluate(cfg, p);
    else if (do_pipe->parsed()) cmd_do_pipeline(cfg, p);
    else if (lu_pipe->parsed()) cmd_lu_pipeline(cfg, p);
    else if (demo->parsed()) cmd_demo(cfg, p);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return pprl::exit_code_for(e);
  }
  return pprl::kExitOk;
}

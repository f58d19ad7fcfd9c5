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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "pprl/binarizer.hpp"
#include "pprl/bloom.hpp"
#include "pprl/encoder.hpp"
#include "pprl/error.hpp"
#include "pprl/io.hpp"
#include "pprl/linkage.hpp"
#include "pprl/pipeline.hpp"
#include "pprl/rng.hpp"

using namespace pprl;

namespace {

// Pinned tolerances and budgets.
constexpr double kSimTol = 1e-9;
constexpr double kFixtureSeconds = 1.0;
constexpr double kDeskSeconds = 60.0;
constexpr double kF1AtNine = 0.85;
constexpr int kPropertyCases = 1000;
constexpr int kDiceOracleCases = 1000;
constexpr int kBloomOracleCases = 200;
constexpr std::size_t kBruteForceSize = 50;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradAbsFloor = 1e-9;
constexpr double kFdStep = 1e-6;
constexpr int kRegSteps = 100;
constexpr double kRegRate = 1e-3;
constexpr double kNonConstantColumns = 0.90;
constexpr int kWireCases = 100;

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

PipelineConfig desk_config() {
  PipelineConfig c;
  c.char_class = "letters";
  c.q = 2;
  c.dim = 64;
  c.l = 1000;
  c.l_f = 1000;
  c.k = 15;
  c.ep = 5;
  c.batch = 75;
  c.block_scheme = "soundex_full";
  c.cols = {"first_name"};
  return c;
}

// Criterion 1.
Outcome fixture() {
  Outcome o;
  const auto start = Clock::now();
  const auto row = BitVector::from_string("10110000101100101100");
  const std::vector<std::uint32_t> sel{0, 2, 6, 13, 16};
  const auto t_pe = apply_selection(row, sel, {}, 20);
  if (t_pe.to_string() != "10100000000000001000") o.fail("pe temporary string " + t_pe.to_string());

  const std::map<std::string, std::string> rows{{"pe", t_pe.to_string()},
                                                {"et", "01000100010000000000"},
                                                {"te", "00000000001000110000"},
                                                {"er", "00000000100100000010"}};
  TempBinaryIndex idx;
  idx.l_f = 20;
  for (const auto& [g, s] : rows) idx.entries.emplace(g, BitVector::from_string(s));
  QGramIndex qi;
  qi.entries.push_back({"peter", gen_qgram_list("peter", 2)});
  qi.entries.push_back({"pete", gen_qgram_list("pete", 2)});
  const auto db = encode_database(qi, idx, 20);
  const auto& b_peter = db.entries[0].bits;
  const auto& b_pete = db.entries[1].bits;
  if (b_peter.to_string() != "11100100111100111010" || b_peter.popcount() != 12) o.fail("peter " + b_peter.to_string());
  if (b_pete.to_string() != "11100100011000111000" || b_pete.popcount() != 9) o.fail("pete " + b_pete.to_string());
  const double sim = dice_bits(b_peter, b_pete);
  if (std::abs(sim - 18.0 / 21.0) > kSimTol) o.fail(fmt::format("dice {}", sim));
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (secs >= kFixtureSeconds) o.fail(fmt::format("took {:.3f} s", secs));
  o.note(fmt::format("dice {:.9f}, {:.4f} s", sim, secs));
  return o;
}

// Criterion 2.
Outcome desk_linkage() {
  Outcome o;
  const auto start = Clock::now();
  const auto report = run_demo(desk_config(), 1000);
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  const DemoRow* at10 = nullptr;
  const DemoRow* at9 = nullptr;
  for (const auto& r : report.rows) {
    if (r.encoder != "EmbBin") continue;
    if (r.threshold == 1.0) at10 = &r;
    if (r.threshold == 0.9) at9 = &r;
  }
  if (at10 == nullptr || at9 == nullptr) {
    o.fail("missing report rows");
    return o;
  }
  const auto& m10 = at10->metrics;
  if (m10.precision != 1.0 || m10.recall != 1.0 || m10.f1 != 1.0) {
    o.fail(fmt::format("s_t=1.0 P={:.4f} R={:.4f} F1={:.4f}", m10.precision, m10.recall, m10.f1));
  }
  if (!(at9->metrics.f1 >= kF1AtNine)) {
    o.fail(fmt::format("s_t=0.9 F1={:.4f} < {:.2f}", at9->metrics.f1, kF1AtNine));
  }
  if (secs >= kDeskSeconds) o.fail(fmt::format("took {:.1f} s", secs));
  o.note(fmt::format("s_t=1.0 P/R/F1 {:.3f}/{:.3f}/{:.3f} (tp {}), s_t=0.9 P/R/F1 {:.3f}/{:.3f}/{:.3f}, {:.1f} s",
                     m10.precision, m10.recall, m10.f1, m10.tp, at9->metrics.precision, at9->metrics.recall,
                     at9->metrics.f1, secs));
  return o;
}

// Criterion 3.
Outcome bounds() {
  Outcome o;
  std::mt19937_64 gen(2024);
  std::size_t violations = 0;
  const auto alpha = gen_all_possible_qgrams(CharClass::parse("letters"), 2);

  // popcount(t) <= k over random configurations and bit matrices.
  for (int c = 0; c < kPropertyCases; ++c) {
    const int l_f = 20 + static_cast<int>(gen() % 200);
    const int l = l_f + static_cast<int>(gen() % 2 ? 0 : gen() % 100);
    const int k = 1 + static_cast<int>(gen() % l_f);
    QGramBitMatrix bits;
    bits.l = static_cast<std::size_t>(l);
    const std::size_t pick = gen() % alpha.size();
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      bits.rows.push_back(i == pick ? BitVector::from_string(oracle::random_bits(gen, l, 0.6)) : BitVector(l));
    }
    const auto t = gen_temp_binary(alpha, bits, alpha[pick], EncodeConfig{k, l, l_f, gen()});
    if (t.popcount() > static_cast<std::size_t>(k) || t.size() != static_cast<std::size_t>(l_f)) ++violations;
  }

  // Final-string bound and OR-monotonicity.
  QGramBitMatrix bits;
  bits.l = 1000;
  for (std::size_t i = 0; i < alpha.size(); ++i) bits.rows.push_back(BitVector::from_string(oracle::random_bits(gen, 1000, 0.5)));
  const auto idx = build_temp_index(alpha, bits, EncodeConfig{15, 1000, 1000, 7});
  for (int c = 0; c < kPropertyCases; ++c) {
    std::vector<std::string> grams(gen() % 15);
    for (auto& g : grams) g = alpha[gen() % alpha.size()];
    std::vector<BitVector> ts;
    for (const auto& g : grams) ts.push_back(idx.at(g));
    const auto b = gen_final_binary(ts, 1000);
    if (b.popcount() > std::min<std::size_t>(1000, 15 * grams.size())) ++violations;
    std::vector<BitVector> sub;
    for (const auto& t : ts) {
      if (gen() % 2) sub.push_back(t);
    }
    if (!is_subset(gen_final_binary(sub, 1000), b)) ++violations;
  }

  // Threshold monotonicity of link.
  for (int c = 0; c < kPropertyCases; ++c) {
    Blocks a, b;
    a.l_f = b.l_f = 24;
    for (int i = 0; i < 5; ++i) {
      a.buckets[gen() % 2 ? "A" : "B"].push_back({"a" + std::to_string(i), BitVector::from_string(oracle::random_bits(gen, 24, 0.3))});
      b.buckets[gen() % 2 ? "A" : "B"].push_back({"b" + std::to_string(i), BitVector::from_string(oracle::random_bits(gen, 24, 0.3))});
    }
    const double lo = static_cast<double>(gen() % 101) / 100.0;
    const double hi = std::min(1.0, lo + static_cast<double>(gen() % 40) / 100.0);
    const auto m_lo = link(a, b, LinkConfig{lo, 0, 1}).matches;
    for (const auto& [pair, sim] : link(a, b, LinkConfig{hi, 0, 1}).matches) {
      if (!m_lo.count(pair) || sim < hi) ++violations;
    }
  }

  // Dice symmetry, bounds and identity.
  for (int c = 0; c < kPropertyCases; ++c) {
    const std::size_t n = 1 + gen() % 300;
    const auto x = BitVector::from_string(oracle::random_bits(gen, n, 0.4));
    const auto y = BitVector::from_string(oracle::random_bits(gen, n, 0.4));
    const double d = dice_bits(x, y);
    if (d != dice_bits(y, x) || d < 0.0 || d > 1.0) ++violations;
    if (!x.none() && dice_bits(x, x) != 1.0) ++violations;
  }
  if (violations != 0) o.fail(fmt::format("{} violations", violations));
  o.note(fmt::format("{} cases per property, {} violations", kPropertyCases, violations));
  return o;
}

// Criterion 4.
Outcome oracle_equivalence() {
  Outcome o;
  std::mt19937_64 gen(77);
  std::size_t dice_bad = 0, bloom_bad = 0, link_bad = 0;
  for (int c = 0; c < kDiceOracleCases; ++c) {
    const std::size_t n = 1 + gen() % 500;
    const double density = static_cast<double>(gen() % 100) / 100.0;
    const auto sa = oracle::random_bits(gen, n, density);
    const auto sb = oracle::random_bits(gen, n, density);
    if (dice_bits(BitVector::from_string(sa), BitVector::from_string(sb)) != oracle::dice_sets(oracle::ones(sa), oracle::ones(sb))) {
      ++dice_bad;
    }
  }
  for (int c = 0; c < kBloomOracleCases; ++c) {
    const BloomConfig cfg{static_cast<int>(1 + gen() % 2000), static_cast<int>(1 + gen() % 30), gen()};
    std::vector<std::string> grams(gen() % 12);
    for (auto& g : grams) {
      g.resize(1 + gen() % 3);
      for (auto& ch : g) ch = static_cast<char>('a' + gen() % 26);
    }
    const auto got = bf_encode(grams, cfg).ones();
    if (std::set<std::size_t>(got.begin(), got.end()) !=
        oracle::bloom_positions(grams, static_cast<std::size_t>(cfg.l_bf), cfg.k_hash, cfg.seed)) {
      ++bloom_bad;
    }
  }
  Blocks a, b;
  a.l_f = b.l_f = 40;
  a.scheme = b.scheme = BlockingScheme::none();
  for (std::size_t i = 0; i < kBruteForceSize; ++i) {
    a.buckets[""].push_back({fmt::format("a{:02d}", i), BitVector::from_string(oracle::random_bits(gen, 40, 0.3))});
    b.buckets[""].push_back({fmt::format("b{:02d}", i), BitVector::from_string(oracle::random_bits(gen, 40, 0.3))});
  }
  for (double st : {0.5, 0.6, 0.7, 0.8}) {
    std::map<IdPair, double> expect;
    for (const auto& ra : a.buckets[""]) {
      for (const auto& rb : b.buckets[""]) {
        const double d = oracle::dice_sets(oracle::ones(ra.bits.to_string()), oracle::ones(rb.bits.to_string()));
        if (d >= st) expect[{ra.id, rb.id}] = d;
      }
    }
    const auto got = link(a, b, LinkConfig{st, 0, 1});
    if (got.matches != expect || got.pairs_compared != kBruteForceSize * kBruteForceSize) ++link_bad;
  }
  if (dice_bad + bloom_bad + link_bad != 0) {
    o.fail(fmt::format("dice {} / bloom {} / link {} mismatches", dice_bad, bloom_bad, link_bad));
  }
  o.note(fmt::format("{} dice pairs, {} Bloom instances, {}x{} brute-force link", kDiceOracleCases, kBloomOracleCases,
                     kBruteForceSize, kBruteForceSize));
  return o;
}

bool close_rel(double a, double b) {
  return std::abs(a - b) <= kGradRelTol * std::max(std::abs(a), std::abs(b)) + kGradAbsFloor;
}

// Criterion 5.
Outcome numerics() {
  Outcome o;
  // Straight-through gradients on d = 3, l = 5.
  std::size_t grad_bad = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto st = init_binarizer(5, 3, seed);
    EmbeddingTable t(4, 3);
    std::mt19937_64 gen(seed + 1000);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    for (std::size_t i = 0; i < 4; ++i) {
      for (auto& v : t.row(i)) v = u(gen);
    }
    const auto grad = reconstruction_gradient(st.m, st.phi, t, 0, 4);
    // Frozen offsets delta = c0 - M0 x make the code M x + delta equal c0 at
    // the evaluation point while exposing the straight-through path.
    std::vector<std::vector<double>> delta;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto c0 = binary_code(st.m, t.row(i));
      std::vector<double> dl(5);
      for (std::size_t j = 0; j < 5; ++j) {
        double z = 0.0;
        for (std::size_t a = 0; a < 3; ++a) z += st.m(j, a) * t.row(i)[a];
        dl[j] = c0[j] - z;
      }
      delta.push_back(dl);
    }
    auto surrogate = [&](const Matrix& m, const std::vector<double>& phi) {
      double loss = 0.0;
      for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t a = 0; a < 3; ++a) {
          double z = phi[a];
          for (std::size_t j = 0; j < 5; ++j) {
            double code = delta[i][j];
            for (std::size_t b = 0; b < 3; ++b) code += m(j, b) * t.row(i)[b];
            z += m(j, a) * code;
          }
          const double r = t.row(i)[a] - std::tanh(z);
          loss += r * r;
        }
      }
      return loss;
    };
    for (std::size_t i = 0; i < st.m.data.size(); ++i) {
      const double saved = st.m.data[i];
      st.m.data[i] = saved + kFdStep;
      const double up = surrogate(st.m, st.phi);
      st.m.data[i] = saved - kFdStep;
      const double down = surrogate(st.m, st.phi);
      st.m.data[i] = saved;
      if (!close_rel((up - down) / (2 * kFdStep), grad.grad_m.data[i])) ++grad_bad;
    }
    for (std::size_t a = 0; a < 3; ++a) {
      const double saved = st.phi[a];
      st.phi[a] = saved + kFdStep;
      const double up = surrogate(st.m, st.phi);
      st.phi[a] = saved - kFdStep;
      const double down = surrogate(st.m, st.phi);
      st.phi[a] = saved;
      if (!close_rel((up - down) / (2 * kFdStep), grad.grad_phi[a])) ++grad_bad;
    }
  }
  if (grad_bad != 0) o.fail(fmt::format("{} gradient components outside tolerance", grad_bad));

  // Regularisation alone.
  auto reg = init_binarizer(5, 3, 5);
  double prev = orthogonality_residual(reg.m);
  const double first = prev;
  std::size_t increases = 0;
  for (int s = 0; s < kRegSteps; ++s) {
    regularization_step(reg, 1e-3, kRegRate);
    const double now = orthogonality_residual(reg.m);
    if (now > prev) ++increases;
    prev = now;
  }
  if (increases != 0) o.fail(fmt::format("residual increased {} times", increases));

  // Default training at desk scale.
  const auto art = build_artifacts(desk_config());
  const auto& hist = art.binarizer.rec_history;
  if (hist.empty() || !(hist.back() < hist.front())) {
    o.fail(fmt::format("rec loss first {:.4f} final {:.4f}", hist.empty() ? 0.0 : hist.front(),
                       hist.empty() ? 0.0 : hist.back()));
  }
  std::size_t non_constant = 0;
  for (std::size_t j = 0; j < art.bits.l; ++j) {
    std::size_t ones = 0;
    for (const auto& row : art.bits.rows) ones += row.test(j);
    non_constant += ones != 0 && ones != art.bits.rows.size();
  }
  const double frac = static_cast<double>(non_constant) / static_cast<double>(art.bits.l);
  if (frac < kNonConstantColumns) o.fail(fmt::format("non-constant columns {:.3f}", frac));
  o.note(fmt::format("residual {:.4f} -> {:.4f}, rec loss {:.2f} -> {:.2f}, non-constant columns {:.3f}", first, prev,
                     hist.empty() ? 0.0 : hist.front(), hist.empty() ? 0.0 : hist.back(), frac));
  return o;
}

// Criterion 6.
Outcome determinism() {
  Outcome o;
  auto cfg = desk_config();
  const auto ds = synthetic_names(200, 8);
  const auto csv = oracle::temp_path("acceptance_do.csv");
  {
    std::ofstream out(csv);
    out << "id,first_name\n";
    for (const auto& r : ds.records) out << r.id << ',' << r.value << '\n';
  }
  const auto a = oracle::temp_path("acceptance_do_a.bin");
  const auto b = oracle::temp_path("acceptance_do_b.bin");
  run_do_pipeline(cfg, csv, a);
  run_do_pipeline(cfg, csv, b);
  const auto bytes_a = io::read_file(a);
  if (bytes_a != io::read_file(b)) o.fail("encoded-blocks files differ");
  const auto party_a = build_artifacts(cfg);
  const auto party_b = build_artifacts(cfg);
  if (!(party_a.temp == party_b.temp)) o.fail("temporary indexes differ");
  o.note(fmt::format("{} identical bytes, {} identical temp entries", bytes_a.size(), party_a.temp.entries.size()));
  return o;
}

// Criterion 7.
Outcome wire() {
  Outcome o;
  std::mt19937_64 gen(4242);
  std::size_t bad = 0;
  Blocks last;
  for (int c = 0; c < kWireCases; ++c) {
    Blocks b;
    b.l_f = static_cast<std::uint32_t>(1 + gen() % 300);
    b.k = static_cast<std::uint32_t>(1 + gen() % b.l_f);
    const auto kind = gen() % 3;
    b.scheme = kind == 0 ? BlockingScheme::none()
               : kind == 1 ? BlockingScheme::soundex_full()
                           : BlockingScheme::soundex_prefix(static_cast<std::uint32_t>(1 + gen() % 8));
    int id = 0;
    for (std::size_t k = gen() % 6; k > 0; --k) {
      auto& recs = b.buckets[fmt::format("K{}", gen() % 1000)];
      for (std::size_t r = gen() % 5; r > 0; --r) {
        recs.push_back({fmt::format("id{}", id++), BitVector::from_string(oracle::random_bits(gen, b.l_f, 0.3))});
      }
    }
    if (!(blocks_from_bytes(blocks_to_bytes(b), "mem") == b)) ++bad;
    last = b;
  }
  if (bad != 0) o.fail(fmt::format("{} round-trip mismatches", bad));

  const auto bytes = blocks_to_bytes(last);
  auto kind_of = [](const std::function<void()>& fn) -> std::optional<ParseError::Kind> {
    try {
      fn();
    } catch (const ParseError& e) {
      return e.kind();
    } catch (...) {
    }
    return std::nullopt;
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'Q';
  auto truncated = bytes;
  truncated.resize(truncated.size() - 1);
  const auto k_magic = kind_of([&] { blocks_from_bytes(bad_magic, "mem"); });
  const auto k_trunc = kind_of([&] { blocks_from_bytes(truncated, "mem"); });
  const auto k_lf = kind_of([&] { blocks_from_bytes(bytes, "mem", last.l_f + 1); });
  if (k_magic != ParseError::Kind::kBadMagic) o.fail("corrupted magic not reported as bad magic");
  if (k_trunc != ParseError::Kind::kTruncated) o.fail("truncated payload not reported as truncation");
  if (k_lf != ParseError::Kind::kLengthMismatch) o.fail("l_f mismatch not reported as length mismatch");
  o.note(fmt::format("{} random instances, three distinct error kinds", kWireCases));
  return o;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 peter/pete fixture reproduction", fixture},
      {"2 desk-scale linkage regression", desk_linkage},
      {"3 bound properties", bounds},
      {"4 oracle equivalences", oracle_equivalence},
      {"5 numerical checks", numerics},
      {"6 determinism", determinism},
      {"7 wire-format round trip", wire},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    fmt::print("{} criterion {}: {}\n", o.pass ? "PASS" : "FAIL", name, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed;
}

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

#include "pprl/linkage.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "pprl/error.hpp"

namespace pprl {

void LinkConfig::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("similarity threshold must lie in [0, 1], got " + std::to_string(threshold));
  }
}

double dice_bits(const BitVector& a, const BitVector& b) {
  const std::size_t common = and_popcount(a, b);
  const std::size_t total = a.popcount() + b.popcount();
  if (total == 0) {
    static std::once_flag warned;
    std::call_once(warned, [] { spdlog::warn("dice of two all-zero bit vectors scored as 0 (reported once)"); });
    return 0.0;
  }
  return 2.0 * static_cast<double>(common) / static_cast<double>(total);
}

double plaintext_dice(std::span<const std::string> qgrams_a, std::span<const std::string> qgrams_b) {
  const std::unordered_set<std::string_view> sa(qgrams_a.begin(), qgrams_a.end());
  const std::unordered_set<std::string_view> sb(qgrams_b.begin(), qgrams_b.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& g : sa) common += sb.count(g);
  return 2.0 * static_cast<double>(common) / static_cast<double>(sa.size() + sb.size());
}

namespace detail {

std::vector<BlockPlan> plan_blocks(const Blocks& a, const Blocks& b, std::uint64_t max_pairs) {
  std::vector<BlockPlan> plans;
  std::uint64_t budget = max_pairs;
  // std::map iterates keys in ascending order.
  for (const auto& [key, recs_a] : a.buckets) {
    const auto it = b.buckets.find(key);
    if (it == b.buckets.end()) continue;
    std::uint64_t pairs = static_cast<std::uint64_t>(recs_a.size()) * it->second.size();
    if (max_pairs != 0) {
      if (budget == 0) break;
      pairs = std::min(pairs, budget);
      budget -= pairs;
    }
    if (pairs > 0) plans.push_back({&recs_a, &it->second, pairs});
  }
  return plans;
}

}  // namespace detail

std::vector<IdPair> candidate_pairs(const Blocks& a, const Blocks& b, std::uint64_t max_pairs) {
  std::vector<IdPair> out;
  for_each_candidate(a, b, max_pairs,
                     [&](const EncodedRecord& ra, const EncodedRecord& rb) { out.emplace_back(ra.id, rb.id); });
  return out;
}

LinkResult link(const Blocks& a, const Blocks& b, const LinkConfig& cfg) {
  cfg.validate();
  if (a.l_f != b.l_f) {
    throw ShapeError("encoded databases disagree on l_f (" + std::to_string(a.l_f) + " vs " +
                     std::to_string(b.l_f) + ")");
  }
  const auto start = std::chrono::steady_clock::now();
  const auto plans = detail::plan_blocks(a, b, cfg.max_pairs);

  using Found = std::vector<std::pair<IdPair, double>>;
  auto compare_block = [&](const detail::BlockPlan& plan, Found& found) {
    std::uint64_t left = plan.limit;
    for (const auto& ra : *plan.a) {
      for (const auto& rb : *plan.b) {
        if (left == 0) return;
        --left;
        const double sim = dice_bits(ra.bits, rb.bits);
        if (sim >= cfg.threshold) found.push_back({{ra.id, rb.id}, sim});
      }
    }
  };

  const unsigned workers = std::max(1U, std::min<unsigned>(cfg.threads, static_cast<unsigned>(plans.size())));
  std::vector<Found> per_worker(workers);
  if (workers == 1) {
    for (const auto& p : plans) compare_block(p, per_worker[0]);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < plans.size(); i += workers) compare_block(plans[i], per_worker[w]);
      });
    }
    for (auto& t : pool) t.join();
  }

  LinkResult result;
  for (auto& found : per_worker) {
    for (auto& [pair, sim] : found) result.matches.emplace(std::move(pair), sim);
  }
  for (const auto& p : plans) result.pairs_compared += p.limit;
  result.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

TruthMode parse_truth_mode(std::string_view name) {
  if (name == "dice" || name == "plaintext_dice") return TruthMode::kPlaintextDice;
  if (name == "id" || name == "shared_id") return TruthMode::kSharedId;
  throw ConfigError("unknown truth mode '" + std::string(name) + "' (expected dice or id)");
}

std::set<IdPair> ground_truth(const Dataset& a, const Dataset& b, int q, TruthMode mode, double threshold,
                              const std::vector<IdPair>* candidates) {
  std::set<IdPair> truth;
  if (mode == TruthMode::kSharedId) {
    std::unordered_set<std::string_view> ids_b;
    for (const auto& r : b.records) ids_b.insert(r.id);
    if (candidates != nullptr) {
      std::unordered_set<std::string_view> ids_a;
      for (const auto& r : a.records) ids_a.insert(r.id);
      for (const auto& [ia, ib] : *candidates) {
        if (ia == ib && ids_a.count(ia) != 0 && ids_b.count(ib) != 0) truth.emplace(ia, ib);
      }
    } else {
      for (const auto& r : a.records) {
        if (ids_b.count(r.id) != 0) truth.emplace(r.id, r.id);
      }
    }
    return truth;
  }

  std::unordered_map<std::string_view, std::vector<std::string>> grams_a;
  std::unordered_map<std::string_view, std::vector<std::string>> grams_b;
  for (const auto& r : a.records) grams_a.emplace(r.id, gen_qgram_list(r.value, q));
  for (const auto& r : b.records) grams_b.emplace(r.id, gen_qgram_list(r.value, q));
  auto consider = [&](const std::string& ia, const std::string& ib) {
    const auto fa = grams_a.find(ia);
    const auto fb = grams_b.find(ib);
    if (fa == grams_a.end() || fb == grams_b.end()) {
      throw ConsistencyError("candidate pair (" + ia + ", " + ib + ") refers to an unknown record");
    }
    if (plaintext_dice(fa->second, fb->second) >= threshold) truth.emplace(ia, ib);
  };
  if (candidates != nullptr) {
    for (const auto& [ia, ib] : *candidates) consider(ia, ib);
  } else {
    for (const auto& ra : a.records) {
      for (const auto& rb : b.records) consider(ra.id, rb.id);
    }
  }
  return truth;
}

Metrics metrics_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn) {
  Metrics m{tp, fp, fn, tn, 0.0, 0.0, 0.0, 0.0};
  const auto ratio = [](std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.accuracy = ratio(tp + tn, tp + tn + fp + fn);
  m.f1 = (m.precision + m.recall) == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

Metrics evaluate(const LinkResult& result, const std::set<IdPair>& truth, std::uint64_t universe) {
  if (universe < result.matches.size()) {
    throw ConsistencyError("universe of " + std::to_string(universe) + " pairs is smaller than the " +
                           std::to_string(result.matches.size()) + " predicted matches");
  }
  std::uint64_t tp = 0;
  for (const auto& [pair, sim] : result.matches) tp += truth.count(pair);
  const std::uint64_t fp = result.matches.size() - tp;
  const std::uint64_t fn = truth.size() - tp;
  if (tp + fp + fn > universe) {
    throw ConsistencyError("tp + fp + fn = " + std::to_string(tp + fp + fn) + " exceeds the universe of " +
                           std::to_string(universe) + " compared pairs");
  }
  return metrics_from_counts(tp, fp, fn, universe - tp - fp - fn);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_matches_csv(const LinkResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataError::Kind::kIo, "cannot write " + path.string());
  out << "id_a,id_b,sim\n";
  for (const auto& [pair, sim] : result.matches) {
    out << csv_field(pair.first) << ',' << csv_field(pair.second) << ',' << fmt::format("{:.6f}", sim) << '\n';
  }
}

LinkResult read_matches_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Kind::kMissingFile, "cannot open matches file " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line, ',') != std::vector<std::string>{"id_a", "id_b", "sim"}) {
    throw DataError(DataError::Kind::kMalformedRow, path.string() + ": expected header id_a,id_b,sim");
  }
  LinkResult result;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line, ',');
    if (f.size() != 3) throw DataError(DataError::Kind::kMalformedRow, path.string() + ": bad row '" + line + "'");
    try {
      result.matches.emplace(IdPair{f[0], f[1]}, std::stod(f[2]));
    } catch (const std::exception&) {
      throw DataError(DataError::Kind::kMalformedRow, path.string() + ": bad similarity '" + f[2] + "'");
    }
  }
  return result;
}

void write_metrics_csv(const Metrics& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataError::Kind::kIo, "cannot write " + path.string());
  out << "tp,fp,fn,tn,precision,recall,accuracy,f1\n";
  out << fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", m.tp, m.fp, m.fn, m.tn, m.precision, m.recall,
                     m.accuracy, m.f1);
}

}  // namespace pprl

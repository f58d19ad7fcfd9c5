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
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pprl/bitvec.hpp"
#include "pprl/encoder.hpp"
#include "pprl/prep.hpp"

namespace pprl {

using IdPair = std::pair<std::string, std::string>;

struct LinkConfig {
  double threshold = 0.8;
  /// Cap on compared pairs; 0 means unlimited.
  std::uint64_t max_pairs = 0;
  /// Worker threads for block comparison. Output does not depend on it.
  unsigned threads = 1;

  void validate() const;
};

struct LinkResult {
  std::map<IdPair, double> matches;
  std::uint64_t pairs_compared = 0;
  double elapsed_seconds = 0.0;
};

struct Metrics {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
};

/// 2 |a & b| / (|a| + |b|); 0.0 when both vectors are all zero.
/// Throws ShapeError on a length mismatch.
double dice_bits(const BitVector& a, const BitVector& b);

/// Dice over q-gram sets (duplicates collapsed); 0.0 when both are empty.
double plaintext_dice(std::span<const std::string> qgrams_a, std::span<const std::string> qgrams_b);

/// Calls fn(record_a, record_b) for every candidate pair in the order the
/// linker compares them: common keys ascending, then records of A by id,
/// then records of B by id, stopping after max_pairs (0 = unlimited).
/// Returns the number of pairs visited.
template <typename Fn>
std::uint64_t for_each_candidate(const Blocks& a, const Blocks& b, std::uint64_t max_pairs, Fn&& fn);

/// The candidate pairs as ids, in comparison order.
std::vector<IdPair> candidate_pairs(const Blocks& a, const Blocks& b, std::uint64_t max_pairs = 0);

/// Compares all cross pairs of every common block and keeps those with
/// Dice >= threshold. Throws ShapeError when l_f differs.
LinkResult link(const Blocks& a, const Blocks& b, const LinkConfig& cfg);

enum class TruthMode { kPlaintextDice, kSharedId };
TruthMode parse_truth_mode(std::string_view name);

/// Ground-truth matches. kPlaintextDice marks pairs whose plaintext q-gram
/// Dice reaches `threshold`; kSharedId marks pairs with equal ids. When
/// `candidates` is given only those pairs are considered, otherwise the
/// full cross product (plaintext mode) or all shared ids (id mode).
std::set<IdPair> ground_truth(const Dataset& a, const Dataset& b, int q, TruthMode mode, double threshold,
                              const std::vector<IdPair>* candidates = nullptr);

/// Confusion counts relative to `universe` compared pairs. Throws
/// ConsistencyError if the counts cannot fit in the universe.
Metrics evaluate(const LinkResult& result, const std::set<IdPair>& truth, std::uint64_t universe);
Metrics metrics_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn);

/// `id_a,id_b,sim` with 6 decimals, sorted by (id_a, id_b).
void write_matches_csv(const LinkResult& result, const std::filesystem::path& path);
LinkResult read_matches_csv(const std::filesystem::path& path);
/// Header plus one row: tp,fp,fn,tn,precision,recall,accuracy,f1.
void write_metrics_csv(const Metrics& m, const std::filesystem::path& path);

// -- implementation ---------------------------------------------------------

namespace detail {

/// One common block and how many of its pairs fall under the cap.
struct BlockPlan {
  const std::vector<EncodedRecord>* a = nullptr;
  const std::vector<EncodedRecord>* b = nullptr;
  std::uint64_t limit = 0;
};

std::vector<BlockPlan> plan_blocks(const Blocks& a, const Blocks& b, std::uint64_t max_pairs);

}  // namespace detail

template <typename Fn>
std::uint64_t for_each_candidate(const Blocks& a, const Blocks& b, std::uint64_t max_pairs, Fn&& fn) {
  std::uint64_t visited = 0;
  for (const auto& plan : detail::plan_blocks(a, b, max_pairs)) {
    std::uint64_t left = plan.limit;
    for (const auto& ra : *plan.a) {
      for (const auto& rb : *plan.b) {
        if (left == 0) break;
        fn(ra, rb);
        --left;
        ++visited;
      }
      if (left == 0) break;
    }
  }
  return visited;
}

}  // namespace pprl

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

// Test-side reference implementations. These are written from the
// textbook definitions and share no code with the library.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace oracle {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t basis = 14695981039346656037ULL) {
  std::uint64_t h = basis;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Vigna's reference splitmix64.c.
struct SplitMix {
  std::uint64_t x;
  std::uint64_t next() {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

// Classic American Soundex. h and w do not separate equal codes; vowels do.
inline std::string soundex(std::string_view word) {
  static const std::string codes = "01230120022455012623010202";  // a..z
  std::string letters;
  for (char c : word) {
    if (std::isalpha(static_cast<unsigned char>(c))) letters += static_cast<char>(std::tolower(c));
  }
  if (letters.empty()) return "";
  std::string out(1, static_cast<char>(std::toupper(letters[0])));
  char prev = codes[letters[0] - 'a'];
  for (std::size_t i = 1; i < letters.size() && out.size() < 4; ++i) {
    const char ch = letters[i];
    const char code = codes[ch - 'a'];
    if (ch == 'h' || ch == 'w') continue;
    if (code == '0') {
      prev = '0';
      continue;
    }
    if (code != prev) out += code;
    prev = code;
  }
  out.resize(4, '0');
  return out;
}

inline std::set<std::size_t> ones(const std::string& bits) {
  std::set<std::size_t> s;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') s.insert(i);
  }
  return s;
}

inline double dice_sets(const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  for (auto p : a) common += b.count(p);
  return 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
}

inline std::set<std::size_t> bloom_positions(const std::vector<std::string>& grams, std::size_t l_bf, int k_hash,
                                             std::uint64_t seed) {
  std::set<std::size_t> out;
  for (const auto& g : grams) {
    const std::uint64_t h1 = fnv1a(g, 14695981039346656037ULL ^ seed);
    const std::uint64_t h2 = fnv1a(g, 0x84222325cbf29ce4ULL) | 1ULL;
    for (int i = 0; i < k_hash; ++i) {
      out.insert(static_cast<std::size_t>((h1 + static_cast<std::uint64_t>(i) * h2) % l_bf));
    }
  }
  return out;
}

inline std::vector<std::string> bigrams(const std::string& s, int q = 2) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(q) <= s.size(); ++i) out.push_back(s.substr(i, q));
  return out;
}

inline std::string random_bits(std::mt19937_64& rng, std::size_t n, double density) {
  std::bernoulli_distribution bit(density);
  std::string s(n, '0');
  for (auto& c : s) c = bit(rng) ? '1' : '0';
  return s;
}

inline std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "pprl_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace oracle

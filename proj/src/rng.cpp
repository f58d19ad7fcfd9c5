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

#include "pprl/rng.hpp"

#include <numeric>
#include <utility>

#include "pprl/error.hpp"

namespace pprl {

std::vector<std::uint32_t> select_distinct(SplitMix64& rng, std::uint32_t n, std::uint32_t k) {
  if (k > n) {
    throw ConfigError("cannot select " + std::to_string(k) + " distinct positions from " +
                      std::to_string(n));
  }
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0U);
  for (std::uint32_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::uint32_t>(i + rng.below(n - i));
    std::swap(perm[i], perm[j]);
  }
  perm.resize(k);
  return perm;
}

}  // namespace pprl

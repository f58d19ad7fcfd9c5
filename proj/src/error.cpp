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

#include "pprl/error.hpp"

namespace pprl {

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e) != nullptr ||
      dynamic_cast<const ParseError*>(&e) != nullptr ||
      dynamic_cast<const LookupError*>(&e) != nullptr ||
      dynamic_cast<const ShapeError*>(&e) != nullptr ||
      dynamic_cast<const ConsistencyError*>(&e) != nullptr) {
    return kExitData;
  }
  return kExitRuntime;
}

}  // namespace pprl

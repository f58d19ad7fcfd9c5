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

#include <stdexcept>
#include <string>

namespace pprl {

// Every failure surfaced by the library derives from Error. The CLI maps the
// concrete type onto its exit code (see exit_code_for).

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Problems with input datasets.
class DataError : public Error {
 public:
  enum class Kind { kMissingFile, kMissingColumn, kDuplicateId, kMalformedRow, kIo };

  DataError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// A q-gram or record id that is not present where it must be.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Bit vectors, matrices or embeddings whose dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Two inputs that should describe the same records do not.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf appeared while training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary files (model, bit matrix, encoded blocks).
class ParseError : public Error {
 public:
  enum class Kind {
    kBadMagic,
    kVersionMismatch,
    kTruncated,
    kLengthMismatch,
    kInvalidField,
    kTrailingData,
    kIo,
  };

  ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitRuntime = 4;

/// Maps a caught exception to the process exit code used by the CLI.
int exit_code_for(const std::exception& e) noexcept;

}  // namespace pprl

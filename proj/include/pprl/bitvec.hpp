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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pprl {

/// Fixed-length bit vector. Bit p is character p of the textual form and
/// lives in byte p/8 at bit 7-(p%8) of the packed form.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  /// Parses a string of '0'/'1' characters; throws ShapeError otherwise.
  static BitVector from_string(std::string_view bits);
  /// Inverse of to_bytes. Throws ShapeError if the byte count is wrong or
  /// padding bits are set.
  static BitVector from_bytes(std::span<const std::uint8_t> bytes, std::size_t size);

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  bool test(std::size_t pos) const noexcept { return (words_[pos / 64] >> (pos % 64)) & 1U; }
  void set(std::size_t pos, bool value = true) noexcept {
    const std::uint64_t mask = std::uint64_t{1} << (pos % 64);
    if (value) {
      words_[pos / 64] |= mask;
    } else {
      words_[pos / 64] &= ~mask;
    }
  }

  std::size_t popcount() const noexcept;
  bool none() const noexcept { return popcount() == 0; }

  /// In-place OR; throws ShapeError on length mismatch.
  BitVector& operator|=(const BitVector& other);

  /// Positions of one-bits in increasing order.
  std::vector<std::size_t> ones() const;

  std::string to_string() const;
  std::vector<std::uint8_t> to_bytes() const;

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

/// popcount(a & b); throws ShapeError on length mismatch.
std::size_t and_popcount(const BitVector& a, const BitVector& b);

/// True when every one-bit of `sub` is also set in `super`.
bool is_subset(const BitVector& sub, const BitVector& super);

}  // namespace pprl

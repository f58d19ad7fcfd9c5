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

#include "pprl/bitvec.hpp"

#include <bit>

#include "pprl/error.hpp"

namespace pprl {

namespace {

void require_same_size(const BitVector& a, const BitVector& b, const char* op) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(op) + ": bit vector lengths differ (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace

BitVector BitVector::from_string(std::string_view bits) {
  BitVector out(bits.size());
  for (std::size_t p = 0; p < bits.size(); ++p) {
    if (bits[p] == '1') {
      out.set(p);
    } else if (bits[p] != '0') {
      throw ShapeError("bit string contains a character other than 0/1 at position " +
                       std::to_string(p));
    }
  }
  return out;
}

BitVector BitVector::from_bytes(std::span<const std::uint8_t> bytes, std::size_t size) {
  if (bytes.size() != (size + 7) / 8) {
    throw ShapeError("expected " + std::to_string((size + 7) / 8) + " bytes for " +
                     std::to_string(size) + " bits, got " + std::to_string(bytes.size()));
  }
  BitVector out(size);
  for (std::size_t byte = 0; byte < bytes.size(); ++byte) {
    for (unsigned b = 0; b < 8; ++b) {
      if (((bytes[byte] >> (7 - b)) & 1U) == 0) continue;
      const std::size_t p = byte * 8 + b;
      if (p >= size) throw ShapeError("padding bits set in packed bit vector");
      out.set(p);
    }
  }
  return out;
}

std::size_t BitVector::popcount() const noexcept {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

BitVector& BitVector::operator|=(const BitVector& other) {
  require_same_size(*this, other, "or");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
  return *this;
}

std::vector<std::size_t> BitVector::ones() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    std::uint64_t w = words_[i];
    while (w != 0) {
      out.push_back(i * 64 + static_cast<std::size_t>(std::countr_zero(w)));
      w &= w - 1;
    }
  }
  return out;
}

std::string BitVector::to_string() const {
  std::string s(size_, '0');
  for (std::size_t p = 0; p < size_; ++p) {
    if (test(p)) s[p] = '1';
  }
  return s;
}

std::vector<std::uint8_t> BitVector::to_bytes() const {
  std::vector<std::uint8_t> out((size_ + 7) / 8, 0);
  for (std::size_t p = 0; p < size_; ++p) {
    if (test(p)) out[p / 8] |= static_cast<std::uint8_t>(1U << (7 - p % 8));
  }
  return out;
}

std::size_t and_popcount(const BitVector& a, const BitVector& b) {
  require_same_size(a, b, "and");
  const auto wa = a.words();
  const auto wb = b.words();
  std::size_t n = 0;
  for (std::size_t i = 0; i < wa.size(); ++i) n += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
  return n;
}

bool is_subset(const BitVector& sub, const BitVector& super) {
  require_same_size(sub, super, "subset");
  const auto ws = sub.words();
  const auto wp = super.words();
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if ((ws[i] & ~wp[i]) != 0) return false;
  }
  return true;
}

}  // namespace pprl

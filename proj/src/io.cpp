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

#include "pprl/io.hpp"

#include <fstream>
#include <iterator>

#include "pprl/error.hpp"

namespace pprl::io {

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  raw(s);
}

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n) {
  if (n > remaining()) {
    throw ParseError(ParseError::Kind::kTruncated,
                     source_ + ": truncated (needed " + std::to_string(n) + " bytes at offset " +
                         std::to_string(pos_) + ", " + std::to_string(remaining()) + " left)");
  }
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::string ByteReader::raw(std::size_t n) {
  const auto b = bytes(n);
  return {b.begin(), b.end()};
}

std::uint32_t ByteReader::u32() {
  const auto b = bytes(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  const auto b = bytes(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

std::string ByteReader::str() {
  const auto n = u32();
  return raw(n);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(ParseError::Kind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataError::Kind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError(DataError::Kind::kIo, "write failed for " + path.string());
}

void expect_magic(ByteReader& reader, std::string_view magic) {
  if (reader.remaining() < magic.size()) {
    throw ParseError(ParseError::Kind::kTruncated, reader.source() + ": file shorter than its magic");
  }
  const std::string got = reader.raw(magic.size());
  if (got == magic) return;
  const std::string_view stem = magic.substr(0, magic.size() - 1);
  if (std::string_view(got).substr(0, stem.size()) == stem) {
    throw ParseError(ParseError::Kind::kVersionMismatch,
                     reader.source() + ": unsupported format version '" + got + "', expected '" +
                         std::string(magic) + "'");
  }
  throw ParseError(ParseError::Kind::kBadMagic,
                   reader.source() + ": bad magic, expected '" + std::string(magic) + "'");
}

}  // namespace pprl::io

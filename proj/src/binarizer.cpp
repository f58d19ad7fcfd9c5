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

#include "pprl/binarizer.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "pprl/error.hpp"
#include "pprl/io.hpp"
#include "pprl/rng.hpp"

namespace pprl {

namespace {

constexpr std::string_view kBitMatrixMagic = "PPRLMP1";

// G = M^T M - I (d x d).
Matrix gram_residual(const Matrix& m) {
  const std::size_t d = m.cols;
  Matrix g(d, d);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    for (std::size_t a = 0; a < d; ++a) {
      const double ra = row[a];
      for (std::size_t b = a; b < d; ++b) g(a, b) += ra * row[b];
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    g(a, a) -= 1.0;
    for (std::size_t b = a + 1; b < d; ++b) g(b, a) = g(a, b);
  }
  return g;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_batch(const Matrix& m, std::span<const double> phi, const EmbeddingTable& table,
                 std::size_t first, std::size_t count) {
  if (static_cast<std::size_t>(table.dim()) != m.cols || phi.size() != m.cols) {
    throw ShapeError("embedding dimension " + std::to_string(table.dim()) +
                     " does not match binarizer dimension " + std::to_string(m.cols));
  }
  if (first + count > table.size()) throw ShapeError("batch exceeds the embedding table");
}

}  // namespace

void BinarizerConfig::validate() const {
  if (l < 1) throw ConfigError("binary string length l must be >= 1");
  if (ep < 1) throw ConfigError("iteration count ep must be >= 1");
  if (s < 1) throw ConfigError("batch size s must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("binarizer learning rate must be finite and non-negative");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and non-negative");
}

BinarizerState init_binarizer(int l, int d, std::uint64_t seed) {
  if (l < 1 || d < 1) throw ConfigError("binarizer needs l >= 1 and d >= 1");
  BinarizerState state;
  state.m = Matrix(static_cast<std::size_t>(l), static_cast<std::size_t>(d));
  state.phi.assign(static_cast<std::size_t>(d), 0.0);
  SplitMix64 rng(seed);
  const double a = std::sqrt(6.0 / static_cast<double>(d + l));
  for (auto& v : state.m.data) v = (2.0 * rng.unit() - 1.0) * a;
  for (auto& v : state.phi) v = static_cast<double>(rng.below(2));
  return state;
}

double orthogonality_residual(const Matrix& m) {
  const Matrix g = gram_residual(m);
  double s = 0.0;
  for (double v : g.data) s += v * v;
  return std::sqrt(s);
}

double regularization_loss(const Matrix& m, double lambda) {
  const double r = orthogonality_residual(m);
  return 0.5 * lambda * r * r;
}

Matrix regularization_gradient(const Matrix& m, double lambda) {
  Matrix grad(m.rows, m.cols);
  if (lambda == 0.0) return grad;
  const Matrix g = gram_residual(m);
  const std::size_t d = m.cols;
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    auto out = grad.row(r);
    for (std::size_t a = 0; a < d; ++a) {
      const double ra = row[a];
      if (ra == 0.0) continue;
      const auto grow = g.row(a);
      for (std::size_t b = 0; b < d; ++b) out[b] += ra * grow[b];
    }
    for (auto& v : out) v *= 2.0 * lambda;
  }
  return grad;
}

void regularization_step(BinarizerState& state, double lambda, double learning_rate) {
  if (lambda != 0.0 && learning_rate != 0.0) {
    const Matrix grad = regularization_gradient(state.m, lambda);
    for (std::size_t i = 0; i < grad.data.size(); ++i) state.m.data[i] -= learning_rate * grad.data[i];
  }
  state.reg_loss = regularization_loss(state.m, lambda);
}

std::vector<double> binary_code(const Matrix& m, std::span<const double> x) {
  std::vector<double> c(m.rows, 0.0);
  for (std::size_t j = 0; j < m.rows; ++j) {
    const auto row = m.row(j);
    double z = 0.0;
    for (std::size_t a = 0; a < m.cols; ++a) z += row[a] * x[a];
    c[j] = z > 0.0 ? 1.0 : 0.0;
  }
  return c;
}

namespace {

// tanh(M^T c + phi)
std::vector<double> decode(const Matrix& m, std::span<const double> phi, std::span<const double> code) {
  std::vector<double> y(phi.begin(), phi.end());
  for (std::size_t j = 0; j < m.rows; ++j) {
    if (code[j] == 0.0) continue;
    const auto row = m.row(j);
    for (std::size_t a = 0; a < m.cols; ++a) y[a] += code[j] * row[a];
  }
  for (auto& v : y) v = std::tanh(v);
  return y;
}

}  // namespace

double reconstruction_loss(const Matrix& m, std::span<const double> phi, const EmbeddingTable& table,
                           std::size_t first, std::size_t count) {
  check_batch(m, phi, table, first, count);
  double loss = 0.0;
  for (std::size_t i = first; i < first + count; ++i) {
    const auto x = table.row(i);
    const auto xhat = decode(m, phi, binary_code(m, x));
    for (std::size_t a = 0; a < m.cols; ++a) loss += (x[a] - xhat[a]) * (x[a] - xhat[a]);
  }
  return loss;
}

ReconstructionGradient reconstruction_gradient(const Matrix& m, std::span<const double> phi,
                                               const EmbeddingTable& table, std::size_t first,
                                               std::size_t count) {
  check_batch(m, phi, table, first, count);
  const std::size_t l = m.rows;
  const std::size_t d = m.cols;
  ReconstructionGradient out;
  out.grad_m = Matrix(l, d);
  out.grad_m_decoder = Matrix(l, d);
  out.grad_phi.assign(d, 0.0);
  std::vector<double> g(d);
  for (std::size_t i = first; i < first + count; ++i) {
    const auto x = table.row(i);
    const auto code = binary_code(m, x);
    const auto xhat = decode(m, phi, code);
    for (std::size_t a = 0; a < d; ++a) {
      const double r = xhat[a] - x[a];
      out.loss += r * r;
      g[a] = 2.0 * r * (1.0 - xhat[a] * xhat[a]);
      out.grad_phi[a] += g[a];
    }
    for (std::size_t j = 0; j < l; ++j) {
      const auto row = m.row(j);
      double e = 0.0;  // (M g)_j, the straight-through signal for code bit j
      for (std::size_t a = 0; a < d; ++a) e += row[a] * g[a];
      auto dec = out.grad_m_decoder.row(j);
      auto tot = out.grad_m.row(j);
      for (std::size_t a = 0; a < d; ++a) {
        const double dd = code[j] * g[a];
        dec[a] += dd;
        tot[a] += dd + e * x[a];
      }
    }
  }
  return out;
}

double reconstruction_step(BinarizerState& state, const EmbeddingTable& table, std::size_t first,
                           std::size_t count, double learning_rate) {
  const auto grad = reconstruction_gradient(state.m, state.phi, table, first, count);
  if (learning_rate != 0.0) {
    for (std::size_t i = 0; i < grad.grad_m.data.size(); ++i) state.m.data[i] -= learning_rate * grad.grad_m.data[i];
    for (std::size_t a = 0; a < state.phi.size(); ++a) state.phi[a] -= learning_rate * grad.grad_phi[a];
  }
  state.rec_loss = grad.loss;
  return grad.loss;
}

BinarizerState train_binarizer(BinarizerState state, const EmbeddingTable& table, const BinarizerConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(table.dim()) != state.d()) {
    throw ShapeError("embedding dimension " + std::to_string(table.dim()) +
                     " does not match binarizer dimension " + std::to_string(state.d()));
  }
  const auto batch = static_cast<std::size_t>(cfg.s);
  if (table.size() < batch) {
    spdlog::warn("batch size {} exceeds the {} q-gram embeddings; binarizer is left untrained", batch,
                 table.size());
  }
  for (int it = 0; it < cfg.ep; ++it) {
    std::size_t batch_no = 0;
    for (std::size_t first = 0; first + batch <= table.size(); first += batch, ++batch_no) {
      regularization_step(state, cfg.lambda, cfg.learning_rate);
      reconstruction_step(state, table, first, batch, cfg.learning_rate);
      state.rec_history.push_back(state.rec_loss);
      state.reg_history.push_back(state.reg_loss);
      if (!std::isfinite(state.rec_loss) || !std::isfinite(state.reg_loss) || !all_finite(state.m.data) ||
          !all_finite(state.phi)) {
        throw DivergenceError("binarizer diverged at iteration " + std::to_string(it + 1) + ", batch " +
                              std::to_string(batch_no + 1));
      }
    }
    spdlog::debug("binarizer iteration {}: rec_l {:.6f} reg_l {:.6f}", it + 1, state.rec_loss, state.reg_loss);
  }
  return state;
}

QGramBitMatrix binarize_alphabet(const BinarizerState& state, const EmbeddingTable& table) {
  if (static_cast<std::size_t>(table.dim()) != state.d()) {
    throw ShapeError("embedding dimension " + std::to_string(table.dim()) +
                     " does not match projection dimension " + std::to_string(state.d()));
  }
  // M_emb (|P| x d) times M' = M^T (d x l).
  QGramBitMatrix out;
  out.l = state.l();
  out.rows.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto x = table.row(i);
    BitVector bits(out.l);
    for (std::size_t j = 0; j < out.l; ++j) {
      const auto mrow = state.m.row(j);
      double z = 0.0;
      for (std::size_t a = 0; a < x.size(); ++a) z += x[a] * mrow[a];
      if (z > 0.0) bits.set(j);
    }
    out.rows.push_back(std::move(bits));
  }
  return out;
}

std::vector<std::uint8_t> bit_matrix_to_bytes(const QGramBitMatrix& bits) {
  io::ByteWriter w;
  w.raw(kBitMatrixMagic);
  w.u32(static_cast<std::uint32_t>(bits.l));
  w.u32(static_cast<std::uint32_t>(bits.rows.size()));
  for (const auto& row : bits.rows) {
    if (row.size() != bits.l) throw ShapeError("bit matrix row length differs from l");
    w.bytes(row.to_bytes());
  }
  return w.buffer();
}

QGramBitMatrix bit_matrix_from_bytes(std::span<const std::uint8_t> bytes, const std::string& source) {
  io::ByteReader r(bytes, source);
  io::expect_magic(r, kBitMatrixMagic);
  QGramBitMatrix out;
  out.l = r.u32();
  const auto rows = r.u32();
  const std::size_t row_bytes = (out.l + 7) / 8;
  if (row_bytes != 0 && rows > r.remaining() / row_bytes) {
    throw ParseError(ParseError::Kind::kTruncated, source + ": truncated bit matrix");
  }
  out.rows.reserve(rows);
  for (std::uint32_t i = 0; i < rows; ++i) {
    try {
      out.rows.push_back(BitVector::from_bytes(r.bytes(row_bytes), out.l));
    } catch (const ShapeError& e) {
      throw ParseError(ParseError::Kind::kLengthMismatch, source + ": " + e.what());
    }
  }
  if (r.remaining() != 0) throw ParseError(ParseError::Kind::kTrailingData, source + ": trailing bytes");
  return out;
}

void save_bit_matrix(const QGramBitMatrix& bits, const std::filesystem::path& path) {
  io::write_file(path, bit_matrix_to_bytes(bits));
}

QGramBitMatrix load_bit_matrix(const std::filesystem::path& path) {
  return bit_matrix_from_bytes(io::read_file(path), path.string());
}

}  // namespace pprl

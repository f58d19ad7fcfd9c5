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
#include <limits>
#include <span>
#include <vector>

#include "pprl/bitvec.hpp"
#include "pprl/embedding.hpp"

namespace pprl {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct BinarizerConfig {
  int l = 1000;
  int ep = 5;
  int s = 75;
  double learning_rate = 1e-3;
  double lambda = 1e-3;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Projection autoencoder parameters. `m` is l x d: row j is the hyperplane
/// that produces bit j. Losses start at +infinity until the first batch.
struct BinarizerState {
  Matrix m;
  std::vector<double> phi;
  double rec_loss = std::numeric_limits<double>::infinity();
  double reg_loss = std::numeric_limits<double>::infinity();
  /// Reconstruction / regularisation loss recorded after every batch.
  std::vector<double> rec_history;
  std::vector<double> reg_history;

  std::size_t l() const noexcept { return m.rows; }
  std::size_t d() const noexcept { return m.cols; }
};

/// M uniform in [-a, a] with a = sqrt(6 / (d + l)); phi uniform over {0, 1}.
BinarizerState init_binarizer(int l, int d, std::uint64_t seed);

/// ||M^T M - I_d||_F
double orthogonality_residual(const Matrix& m);

/// (lambda / 2) * ||M^T M - I_d||_F^2 and its gradient 2 lambda M (M^T M - I).
double regularization_loss(const Matrix& m, double lambda);
Matrix regularization_gradient(const Matrix& m, double lambda);
void regularization_step(BinarizerState& state, double lambda, double learning_rate);

/// Gradients of sum_x ||x - tanh(M^T c(x) + phi)||^2 with c(x) = step(M x).
/// The step function is passed straight through (treated as identity in the
/// backward pass), so grad_m = grad_m_decoder + (M g) x^T where
/// grad_m_decoder = c g^T is the part obtained with the code held fixed.
struct ReconstructionGradient {
  double loss = 0.0;
  Matrix grad_m;
  Matrix grad_m_decoder;
  std::vector<double> grad_phi;
};

/// Binary code step(M x): 1 where the projection is strictly positive.
std::vector<double> binary_code(const Matrix& m, std::span<const double> x);

double reconstruction_loss(const Matrix& m, std::span<const double> phi, const EmbeddingTable& table,
                           std::size_t first, std::size_t count);
ReconstructionGradient reconstruction_gradient(const Matrix& m, std::span<const double> phi,
                                               const EmbeddingTable& table, std::size_t first,
                                               std::size_t count);
/// Gradient step on M and phi for rows [first, first + count); returns the
/// pre-step batch loss.
double reconstruction_step(BinarizerState& state, const EmbeddingTable& table, std::size_t first,
                           std::size_t count, double learning_rate);

/// Runs cfg.ep passes over every full batch of cfg.s consecutive rows. Each
/// batch takes a regularisation step followed by a reconstruction step.
/// Throws ShapeError on a dimension mismatch and DivergenceError on NaN/Inf.
BinarizerState train_binarizer(BinarizerState state, const EmbeddingTable& table,
                               const BinarizerConfig& cfg);

/// Per-q-gram rows of l bits, aligned with the alphabet order.
struct QGramBitMatrix {
  std::size_t l = 0;
  std::vector<BitVector> rows;

  friend bool operator==(const QGramBitMatrix&, const QGramBitMatrix&) = default;
};

/// bit(i, j) = 1 iff (M_emb M^T)(i, j) > 0.
QGramBitMatrix binarize_alphabet(const BinarizerState& state, const EmbeddingTable& table);

/// "PPRLMP1", u32 l, u32 row count, then each row packed MSB-first.
void save_bit_matrix(const QGramBitMatrix& bits, const std::filesystem::path& path);
QGramBitMatrix load_bit_matrix(const std::filesystem::path& path);
std::vector<std::uint8_t> bit_matrix_to_bytes(const QGramBitMatrix& bits);
QGramBitMatrix bit_matrix_from_bytes(std::span<const std::uint8_t> bytes, const std::string& source);

}  // namespace pprl

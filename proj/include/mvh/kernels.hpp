// Copyright 2026 The mvh Authors
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

// Dense kernels behind the toy decoder. Every kernel exists twice: a serial
// reference in mvh::kernels::serial and an OpenMP version in
// mvh::kernels::omp. Both share the same per-row arithmetic, so their
// outputs are bit-identical.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mvh/matrix.hpp"

namespace mvh::kernels {

enum class Backend { serial, parallel };

/// Result of masked multi-head attention for a block of query rows.
struct AttentionOutput {
  Matrix context;              // rows x model_dim, heads concatenated
  std::vector<Matrix> probs;   // per head: rows x T post-softmax weights
};

/// Inputs for one attention call. Query rows cover sequence positions
/// [row_offset, row_offset + q.rows()); keys and values cover [0, T).
/// `masks` holds either one additive T x T mask shared by every head or one
/// per head.
struct AttentionInputs {
  const Matrix& q;
  const Matrix& k;
  const Matrix& v;
  std::size_t num_heads;
  std::size_t row_offset;
  std::span<const Matrix* const> masks;
};

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix layer_norm(const Matrix& x, std::span<const double> gamma, std::span<const double> beta);
void gelu_inplace(Matrix& x);
void add_row_vector(Matrix& x, std::span<const double> bias);
AttentionOutput attention(const AttentionInputs& in);
}  // namespace serial

namespace omp {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix layer_norm(const Matrix& x, std::span<const double> gamma, std::span<const double> beta);
void gelu_inplace(Matrix& x);
void add_row_vector(Matrix& x, std::span<const double> bias);
AttentionOutput attention(const AttentionInputs& in);
}  // namespace omp

// Backend dispatch.
Matrix matmul(const Matrix& a, const Matrix& b, Backend backend);
Matrix layer_norm(const Matrix& x, std::span<const double> gamma, std::span<const double> beta,
                  Backend backend);
void gelu_inplace(Matrix& x, Backend backend);
void add_row_vector(Matrix& x, std::span<const double> bias, Backend backend);
AttentionOutput attention(const AttentionInputs& in, Backend backend);

/// Numerically stable softmax of `scores + mask` over one row. Masked
/// entries (NEG_INF) come out as exactly 0. A row with no finite entry
/// yields all zeros.
void masked_softmax_row(std::span<const double> scores, std::span<const double> mask,
                        std::span<double> out);

}  // namespace mvh::kernels

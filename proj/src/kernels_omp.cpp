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

#include <omp.h>

#include "kernel_rows.hpp"

namespace mvh::kernels::omp {

namespace {
using Index = std::ptrdiff_t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  detail::check_matmul(a, b);
  Matrix out(a.rows(), b.cols());
  const Index rows = static_cast<Index>(a.rows());
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) detail::matmul_row(a, b, static_cast<std::size_t>(r), out);
  return out;
}

Matrix layer_norm(const Matrix& x, std::span<const double> gamma, std::span<const double> beta) {
  Matrix out(x.rows(), x.cols());
  const Index rows = static_cast<Index>(x.rows());
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) {
    detail::layer_norm_row(x, gamma, beta, static_cast<std::size_t>(r), out);
  }
  return out;
}

void gelu_inplace(Matrix& x) {
  auto& d = x.data();
  const Index n = static_cast<Index>(d.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = detail::gelu(d[static_cast<std::size_t>(i)]);
}

void add_row_vector(Matrix& x, std::span<const double> bias) {
  const Index rows = static_cast<Index>(x.rows());
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) {
    auto row = x.row(static_cast<std::size_t>(r));
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[j];
  }
}

AttentionOutput attention(const AttentionInputs& in) {
  detail::check_attention(in);
  auto out = detail::make_attention_output(in);
  const Index heads = static_cast<Index>(in.num_heads);
  const Index rows = static_cast<Index>(in.q.rows());
  // Each (head, row) writes a disjoint slice of probs and context.
#pragma omp parallel for collapse(2) schedule(static)
  for (Index h = 0; h < heads; ++h) {
    for (Index r = 0; r < rows; ++r) {
      detail::attention_row(in, static_cast<std::size_t>(h), static_cast<std::size_t>(r), out);
    }
  }
  return out;
}

}  // namespace mvh::kernels::omp

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

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernel_rows.hpp"

namespace mvh::kernels {

void masked_softmax_row(std::span<const double> scores, std::span<const double> mask,
                        std::span<double> out) {
  const std::size_t n = scores.size();
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) peak = std::max(peak, scores[j] + mask[j]);
  if (!std::isfinite(peak)) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double s = scores[j] + mask[j];
    out[j] = std::isinf(s) ? 0.0 : std::exp(s - peak);
    sum += out[j];
  }
  for (std::size_t j = 0; j < n; ++j) out[j] /= sum;
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  detail::check_matmul(a, b);
  Matrix out(a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) detail::matmul_row(a, b, r, out);
  return out;
}

Matrix layer_norm(const Matrix& x, std::span<const double> gamma, std::span<const double> beta) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) detail::layer_norm_row(x, gamma, beta, r, out);
  return out;
}

void gelu_inplace(Matrix& x) {
  for (double& v : x.data()) v = detail::gelu(v);
}

void add_row_vector(Matrix& x, std::span<const double> bias) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[j];
  }
}

AttentionOutput attention(const AttentionInputs& in) {
  detail::check_attention(in);
  auto out = detail::make_attention_output(in);
  for (std::size_t h = 0; h < in.num_heads; ++h) {
    for (std::size_t r = 0; r < in.q.rows(); ++r) detail::attention_row(in, h, r, out);
  }
  return out;
}

}  // namespace serial

Matrix matmul(const Matrix& a, const Matrix& b, Backend backend) {
  return backend == Backend::serial ? serial::matmul(a, b) : omp::matmul(a, b);
}

Matrix layer_norm(const Matrix& x, std::span<const double> gamma, std::span<const double> beta,
                  Backend backend) {
  return backend == Backend::serial ? serial::layer_norm(x, gamma, beta)
                                    : omp::layer_norm(x, gamma, beta);
}

void gelu_inplace(Matrix& x, Backend backend) {
  backend == Backend::serial ? serial::gelu_inplace(x) : omp::gelu_inplace(x);
}

void add_row_vector(Matrix& x, std::span<const double> bias, Backend backend) {
  backend == Backend::serial ? serial::add_row_vector(x, bias) : omp::add_row_vector(x, bias);
}

AttentionOutput attention(const AttentionInputs& in, Backend backend) {
  return backend == Backend::serial ? serial::attention(in) : omp::attention(in);
}

}  // namespace mvh::kernels

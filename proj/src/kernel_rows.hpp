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

// Per-row bodies shared by the serial and OpenMP drivers. Keeping the
// arithmetic here (and only here) is what makes the two backends agree
// bit for bit.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "mvh/kernels.hpp"

namespace mvh::kernels::detail {

inline constexpr double kLayerNormEps = 1e-5;

inline void check_matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ");
  }
}

inline void matmul_row(const Matrix& a, const Matrix& b, std::size_t r, Matrix& out) {
  auto dst = out.row(r);
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double s = a(r, k);
    if (s == 0.0) continue;
    auto src = b.row(k);
    for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += s * src[j];
  }
}

inline void layer_norm_row(const Matrix& x, std::span<const double> gamma,
                           std::span<const double> beta, std::size_t r, Matrix& out) {
  const auto src = x.row(r);
  const double n = static_cast<double>(src.size());
  double mean = 0.0;
  for (double v : src) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : src) var += (v - mean) * (v - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
  auto dst = out.row(r);
  for (std::size_t j = 0; j < src.size(); ++j) {
    dst[j] = (src[j] - mean) * inv * gamma[j] + beta[j];
  }
}

inline double gelu(double x) {
  // tanh approximation
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * x * (1.0 + std::tanh(kC * (x + 0.044715 * x * x * x)));
}

inline void check_attention(const AttentionInputs& in) {
  const std::size_t t = in.k.rows();
  if (in.num_heads == 0 || in.q.cols() % in.num_heads != 0) {
    throw std::invalid_argument("attention: model dim not divisible by heads");
  }
  if (in.k.cols() != in.q.cols() || in.v.cols() != in.q.cols() || in.v.rows() != t) {
    throw std::invalid_argument("attention: q/k/v shape mismatch");
  }
  if (in.row_offset + in.q.rows() > t) {
    throw std::invalid_argument("attention: query rows exceed key length");
  }
  if (in.masks.size() != 1 && in.masks.size() != in.num_heads) {
    throw std::invalid_argument("attention: need one mask or one per head");
  }
  for (const Matrix* m : in.masks) {
    if (m == nullptr || m->rows() != t || m->cols() != t) {
      throw std::invalid_argument("attention: mask must be T x T");
    }
  }
}

inline AttentionOutput make_attention_output(const AttentionInputs& in) {
  AttentionOutput out;
  out.context = Matrix(in.q.rows(), in.q.cols());
  out.probs.assign(in.num_heads, Matrix(in.q.rows(), in.k.rows()));
  return out;
}

/// Head `h`, local query row `r`.
inline void attention_row(const AttentionInputs& in, std::size_t h, std::size_t r,
                          AttentionOutput& out) {
  const std::size_t t = in.k.rows();
  const std::size_t hd = in.q.cols() / in.num_heads;
  const std::size_t c0 = h * hd;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const Matrix& mask = *in.masks[in.masks.size() == 1 ? 0 : h];
  const auto qrow = in.q.row(r);

  std::vector<double> scores(t);
  for (std::size_t j = 0; j < t; ++j) {
    const auto krow = in.k.row(j);
    double dot = 0.0;
    for (std::size_t c = 0; c < hd; ++c) dot += qrow[c0 + c] * krow[c0 + c];
    scores[j] = dot * scale;
  }
  auto probs = out.probs[h].row(r);
  masked_softmax_row(scores, mask.row(in.row_offset + r), probs);

  auto ctx = out.context.row(r);
  for (std::size_t j = 0; j < t; ++j) {
    const double p = probs[j];
    if (p == 0.0) continue;
    const auto vrow = in.v.row(j);
    for (std::size_t c = 0; c < hd; ++c) ctx[c0 + c] += p * vrow[c0 + c];
  }
}

}  // namespace mvh::kernels::detail

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "mvh/kernels.hpp"
#include "mvh/mask.hpp"

namespace {

using mvh::Matrix;
namespace k = mvh::kernels;

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  return m;
}

}  // namespace

TEST_CASE("matrix slice and append round-trip") {
  std::mt19937_64 rng(1);
  const Matrix m = random_matrix(5, 3, rng);
  Matrix top = m.slice_rows(0, 2);
  top.append_rows(m.slice_rows(2, 5));
  CHECK(top == m);
  Matrix empty;
  empty.append_rows(m);
  CHECK(empty == m);
  CHECK_THROWS_AS(m.slice_rows(3, 6), std::out_of_range);
  Matrix other(1, 4);
  CHECK_THROWS_AS(top.append_rows(other), std::invalid_argument);
}

TEST_CASE("matmul matches the textbook triple loop") {
  std::mt19937_64 rng(2);
  const Matrix a = random_matrix(7, 5, rng);
  const Matrix b = random_matrix(5, 4, rng);
  const Matrix c = k::serial::matmul(a, b);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < 5; ++t) s += a(i, t) * b(t, j);
      CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-12));
    }
  }
  CHECK_THROWS(k::serial::matmul(a, a));
}

TEST_CASE("serial and OpenMP kernels agree bit for bit") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t rows = 1 + rng() % 17, inner = 1 + rng() % 33, cols = 1 + rng() % 29;
    const Matrix a = random_matrix(rows, inner, rng);
    const Matrix b = random_matrix(inner, cols, rng);
    CHECK(k::serial::matmul(a, b) == k::omp::matmul(a, b));

    std::vector<double> gamma(inner), beta(inner);
    for (std::size_t j = 0; j < inner; ++j) {
      gamma[j] = 1.0 + 0.1 * static_cast<double>(j);
      beta[j] = -0.05 * static_cast<double>(j);
    }
    CHECK(k::serial::layer_norm(a, gamma, beta) == k::omp::layer_norm(a, gamma, beta));

    Matrix g1 = a, g2 = a;
    k::serial::gelu_inplace(g1);
    k::omp::gelu_inplace(g2);
    CHECK(g1 == g2);

    Matrix r1 = a, r2 = a;
    k::serial::add_row_vector(r1, beta);
    k::omp::add_row_vector(r2, beta);
    CHECK(r1 == r2);
  }
}

TEST_CASE("attention backends agree and respect masks") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t t = 2 + rng() % 12, heads = 1 + rng() % 4, d = heads * (1 + rng() % 5);
    const Matrix q = random_matrix(t, d, rng), kk = random_matrix(t, d, rng),
                 v = random_matrix(t, d, rng);
    mvh::AttentionMask m = mvh::build_causal_mask(t);
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (rng() % 3 == 0) m.block(i, j);
      }
    }
    const Matrix* masks[] = {&m.additive()};
    const k::AttentionInputs in{q, kk, v, heads, 0, masks};
    const auto s = k::serial::attention(in);
    const auto o = k::omp::attention(in);
    CHECK(s.context == o.context);
    REQUIRE(s.probs.size() == heads);
    for (std::size_t h = 0; h < heads; ++h) {
      CHECK(s.probs[h] == o.probs[h]);
      for (std::size_t i = 0; i < t; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < t; ++j) {
          if (m.blocked(i, j)) CHECK(s.probs[h](i, j) == 0.0);
          sum += s.probs[h](i, j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("attention over a row block equals the matching rows of the full call") {
  std::mt19937_64 rng(5);
  const std::size_t t = 9, d = 8, heads = 2;
  const Matrix q = random_matrix(t, d, rng), kk = random_matrix(t, d, rng),
               v = random_matrix(t, d, rng);
  const auto causal = mvh::build_causal_mask(t);
  const Matrix* masks[] = {&causal.additive()};
  const auto full = k::serial::attention({q, kk, v, heads, 0, masks});
  const Matrix tail_q = q.slice_rows(4, t);
  const auto tail = k::omp::attention({tail_q, kk, v, heads, 4, masks});
  CHECK(tail.context == full.context.slice_rows(4, t));
  CHECK(tail.probs[1] == full.probs[1].slice_rows(4, t));
}

TEST_CASE("masked softmax edge cases") {
  const std::vector<double> scores = {1.0, 2.0, 3.0};
  std::vector<double> out(3);
  const std::vector<double> open = {0.0, 0.0, 0.0};
  k::masked_softmax_row(scores, open, out);
  CHECK(out[0] + out[1] + out[2] == doctest::Approx(1.0));
  CHECK(out[2] > out[1]);

  const std::vector<double> one = {mvh::kNegInf, 0.0, mvh::kNegInf};
  k::masked_softmax_row(scores, one, out);
  CHECK(out == std::vector<double>{0.0, 1.0, 0.0});

  const std::vector<double> none = {mvh::kNegInf, mvh::kNegInf, mvh::kNegInf};
  k::masked_softmax_row(scores, none, out);
  CHECK(out == std::vector<double>{0.0, 0.0, 0.0});

  const std::vector<double> huge = {1000.0, 999.0, -1000.0};
  k::masked_softmax_row(huge, open, out);
  CHECK(std::isfinite(out[0]));
  CHECK(out[0] + out[1] + out[2] == doctest::Approx(1.0));
}

TEST_CASE("layer norm and gelu values") {
  Matrix x(1, 4);
  x.data() = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> g(4, 1.0), b(4, 0.0);
  const Matrix y = k::layer_norm(x, g, b, k::Backend::serial);
  double mean = 0.0, var = 0.0;
  for (double v : y.data()) mean += v / 4.0;
  for (double v : y.data()) var += (v - mean) * (v - mean) / 4.0;
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(var == doctest::Approx(1.25 / (1.25 + 1e-5)).epsilon(1e-12));

  Matrix z(1, 3);
  z.data() = {0.0, 10.0, -10.0};
  k::gelu_inplace(z, k::Backend::parallel);
  CHECK(z(0, 0) == 0.0);
  CHECK(z(0, 1) == doctest::Approx(10.0));
  CHECK(z(0, 2) == doctest::Approx(0.0).epsilon(1e-12));
}

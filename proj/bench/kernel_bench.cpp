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

// Serial reference vs OpenMP kernels, plus a full decoder forward on each
// backend. Run with OMP_NUM_THREADS set to compare scaling.

#include <benchmark/benchmark.h>

#include <random>

#include "mvh/decoder.hpp"
#include "mvh/kernels.hpp"

namespace {

using mvh::kernels::Backend;

mvh::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  mvh::Matrix m(rows, cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

void matmul(benchmark::State& state, Backend backend) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mvh::kernels::matmul(a, b, backend));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

void attention(benchmark::State& state, Backend backend) {
  const auto t = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 32;
  const auto q = random_matrix(t, d, 3), k = random_matrix(t, d, 4), v = random_matrix(t, d, 5);
  const mvh::Matrix mask = mvh::build_causal_mask(t).additive();
  const mvh::Matrix* masks[] = {&mask};
  for (auto _ : state) {
    benchmark::DoNotOptimize(mvh::kernels::attention({q, k, v, 4, 0, masks}, backend));
  }
}

void forward(benchmark::State& state, Backend backend) {
  const auto t = static_cast<std::size_t>(state.range(0));
  const auto w = mvh::init_decoder(mvh::DecoderConfig{}, 0);
  std::vector<mvh::TokenId> image(t), text(8);
  for (std::size_t k = 0; k < t; ++k) image[k] = static_cast<mvh::TokenId>(k % 64);
  const auto rm = mvh::build_sequence({0}, {{1, image}}, text);
  mvh::ForwardOptions opt;
  opt.backend = backend;
  for (auto _ : state) benchmark::DoNotOptimize(mvh::forward(w, rm, {}, opt).logits);
}

}  // namespace

BENCHMARK_CAPTURE(matmul, serial, Backend::serial)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(matmul, omp, Backend::parallel)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(attention, serial, Backend::serial)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(attention, omp, Backend::parallel)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(forward, serial, Backend::serial)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(forward, omp, Backend::parallel)->Arg(128)->Arg(512);

BENCHMARK_MAIN();

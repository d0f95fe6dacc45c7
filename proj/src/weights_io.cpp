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

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "mvh/decoder.hpp"

namespace mvh {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw ConfigError("weights file: truncated header");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw ConfigError("weights file: truncated body");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

void put_values(std::ostream& out, const std::vector<double>& v) {
  for (double x : v) put_f64(out, x);
}

std::vector<double> get_values(std::istream& in, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = get_f64(in);
  return v;
}

Matrix get_matrix(std::istream& in, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  m.data() = get_values(in, rows * cols);
  return m;
}

}  // namespace

void save_weights(const DecoderWeights& w, std::ostream& out) {
  const auto& c = w.config();
  put_u32(out, static_cast<std::uint32_t>(c.num_layers));
  put_u32(out, static_cast<std::uint32_t>(c.model_dim));
  put_u32(out, static_cast<std::uint32_t>(c.num_heads));
  put_u32(out, static_cast<std::uint32_t>(c.vocab_size));
  put_u32(out, c.layer_norm ? 1u : 0u);
  put_u32(out, w.seed());
  put_values(out, w.embedding().data());
  for (const auto& l : w.layers()) {
    put_values(out, l.ln1_gamma);
    put_values(out, l.ln1_beta);
    put_values(out, l.wq.data());
    put_values(out, l.wk.data());
    put_values(out, l.wv.data());
    put_values(out, l.wo.data());
    put_values(out, l.ln2_gamma);
    put_values(out, l.ln2_beta);
    put_values(out, l.w1.data());
    put_values(out, l.b1);
    put_values(out, l.w2.data());
    put_values(out, l.b2);
  }
  put_values(out, w.final_gamma());
  put_values(out, w.final_beta());
  put_values(out, w.output().data());
  if (!out) {
    throw std::runtime_error("weights file: write failed");
  }
}

DecoderWeights load_weights(std::istream& in) {
  DecoderConfig c;
  c.num_layers = get_u32(in);
  c.model_dim = get_u32(in);
  c.num_heads = get_u32(in);
  c.vocab_size = get_u32(in);
  const std::uint32_t norm = get_u32(in);
  if (norm > 1) {
    throw ConfigError("weights file: layer_norm flag must be 0 or 1");
  }
  c.layer_norm = norm == 1;
  const std::uint32_t seed = get_u32(in);
  c.validate();
  const std::size_t d = c.model_dim;
  const std::size_t f = c.ffn_dim();
  Matrix embedding = get_matrix(in, c.vocab_size, d);
  std::vector<LayerWeights> layers(c.num_layers);
  for (auto& l : layers) {
    l.ln1_gamma = get_values(in, d);
    l.ln1_beta = get_values(in, d);
    l.wq = get_matrix(in, d, d);
    l.wk = get_matrix(in, d, d);
    l.wv = get_matrix(in, d, d);
    l.wo = get_matrix(in, d, d);
    l.ln2_gamma = get_values(in, d);
    l.ln2_beta = get_values(in, d);
    l.w1 = get_matrix(in, d, f);
    l.b1 = get_values(in, f);
    l.w2 = get_matrix(in, f, d);
    l.b2 = get_values(in, d);
  }
  auto gamma = get_values(in, d);
  auto beta = get_values(in, d);
  Matrix output = get_matrix(in, d, c.vocab_size);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ConfigError("weights file: trailing bytes after output head");
  }
  return DecoderWeights(c, seed, std::move(embedding), std::move(layers), std::move(gamma),
                        std::move(beta), std::move(output));
}

void save_weights(const DecoderWeights& weights, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  save_weights(weights, out);
}

DecoderWeights load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  return load_weights(in);
}

}  // namespace mvh

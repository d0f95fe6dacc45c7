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

#include "mvh/grounding.hpp"

#include <cmath>

namespace mvh::grounding {

namespace {

// Residual-stream layout.
struct Dims {
  std::size_t num_symbols;
  static constexpr std::size_t bias = 0;
  static constexpr std::size_t image_view(int v) { return static_cast<std::size_t>(v); }       // 1, 2
  static constexpr std::size_t number_view(int v) { return 2 + static_cast<std::size_t>(v); }  // 3, 4
  static constexpr std::size_t query_view(int v) { return 4 + static_cast<std::size_t>(v); }   // 5, 6
  static constexpr std::size_t salient = 7;
  std::size_t symbol(int s) const { return 8 + static_cast<std::size_t>(s); }
  std::size_t readout(int s) const { return 8 + num_symbols + static_cast<std::size_t>(s); }
  std::size_t model_dim() const { return 8 + 2 * num_symbols; }
};

LayerWeights zero_layer(std::size_t d) {
  LayerWeights l;
  l.ln1_gamma.assign(d, 1.0);
  l.ln1_beta.assign(d, 0.0);
  l.wq = Matrix(d, d);
  l.wk = Matrix(d, d);
  l.wv = Matrix(d, d);
  l.wo = Matrix(d, d);
  l.ln2_gamma.assign(d, 1.0);
  l.ln2_beta.assign(d, 0.0);
  l.w1 = Matrix(d, 4 * d);
  l.b1.assign(4 * d, 0.0);
  l.w2 = Matrix(4 * d, d);
  l.b2.assign(d, 0.0);
  return l;
}

}  // namespace

Preset grounding_preset(std::size_t num_symbols, bool distractor_bias) {
  if (num_symbols < 2) {
    throw ConfigError("grounding preset needs at least 2 symbols");
  }
  const Vocabulary vocab{num_symbols};
  const Dims dim{num_symbols};
  const int symbols = static_cast<int>(num_symbols);

  DecoderConfig cfg;
  cfg.num_layers = kNumLayers;
  cfg.model_dim = dim.model_dim();
  cfg.num_heads = 1;
  cfg.vocab_size = vocab.size();
  cfg.layer_norm = false;
  const std::size_t d = cfg.model_dim;
  // Query weights absorb the 1/sqrt(head_dim) score scaling.
  const double unscale = std::sqrt(static_cast<double>(d));

  Matrix embedding(cfg.vocab_size, d);
  for (std::size_t t = 0; t < cfg.vocab_size; ++t) embedding(t, Dims::bias) = 1.0;
  for (int v = 1; v <= 2; ++v) {
    embedding(static_cast<std::size_t>(Vocabulary::view_number(v)), Dims::number_view(v)) = 1.0;
    for (int s = 0; s < symbols; ++s) {
      const auto tok = static_cast<std::size_t>(vocab.image(v, s));
      embedding(tok, Dims::image_view(v)) = 1.0;
      embedding(tok, dim.symbol(s)) = 1.0;
      if (s == kSalientSymbol) embedding(tok, Dims::salient) = 1.0;
    }
  }

  std::vector<LayerWeights> layers;
  for (std::size_t l = 0; l < kNumLayers; ++l) layers.push_back(zero_layer(d));

  // Aggregation: the bias feature queries the number-word key.
  LayerWeights& agg = layers[kAggregationLayer];
  agg.wq(Dims::bias, 0) = kAggregationGain * unscale;
  for (int v = 1; v <= 2; ++v) {
    agg.wk(Dims::number_view(v), 0) = 1.0;
    agg.wv(Dims::number_view(v), Dims::query_view(v)) = 1.0;
    agg.wo(Dims::query_view(v), Dims::query_view(v)) = 1.0;
  }

  // Retrieval: query-view register against the image-view key.
  LayerWeights& ret = layers[kRetrievalLayer];
  for (int v = 1; v <= 2; ++v) {
    ret.wq(Dims::query_view(v), static_cast<std::size_t>(v)) = kRetrievalGain * unscale;
    ret.wk(Dims::image_view(v), static_cast<std::size_t>(v)) = 1.0;
  }
  if (distractor_bias) {
    ret.wq(Dims::bias, Dims::salient) = kSalience * unscale;
    ret.wk(Dims::salient, Dims::salient) = 1.0;
  }
  for (int s = 0; s < symbols; ++s) {
    ret.wv(dim.symbol(s), dim.readout(s)) = 1.0;
    ret.wo(dim.readout(s), dim.readout(s)) = 1.0;
  }

  Matrix output(d, cfg.vocab_size);
  for (int s = 0; s < symbols; ++s) {
    output(dim.readout(s), static_cast<std::size_t>(vocab.symbol(s))) = kSymbolGain;
  }
  output(Dims::bias, static_cast<std::size_t>(Vocabulary::default_token())) = kDefaultLogit;

  DecoderWeights weights(cfg, 0, std::move(embedding), std::move(layers),
                         std::vector<double>(d, 1.0), std::vector<double>(d, 0.0),
                         std::move(output));
  return Preset{vocab, std::move(weights)};
}

std::vector<Instance> all_instances(std::size_t num_symbols) {
  std::vector<Instance> out;
  const int n = static_cast<int>(num_symbols);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      out.push_back({a, b, 1});
      out.push_back({a, b, 2});
    }
  }
  return out;
}

RoleMap instance_prompt(const Vocabulary& vocab, const Instance& instance) {
  return build_sequence({Vocabulary::system()},
                        {{1, {vocab.image(1, instance.view1_symbol)}},
                         {2, {vocab.image(2, instance.view2_symbol)}}},
                        {Vocabulary::view_word(), Vocabulary::view_number(instance.queried_view),
                         Vocabulary::query_end()});
}

TokenId expected_answer(const Vocabulary& vocab, const Instance& instance) {
  return vocab.symbol(instance.queried_view == 1 ? instance.view1_symbol : instance.view2_symbol);
}

}  // namespace mvh::grounding

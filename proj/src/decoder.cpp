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

#include "mvh/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mvh/log.hpp"

namespace mvh {

void DecoderConfig::validate() const {
  if (num_layers == 0 || model_dim == 0 || num_heads == 0 || vocab_size == 0) {
    throw ConfigError("decoder config: all counts must be >= 1");
  }
  if (model_dim % num_heads != 0) {
    throw ConfigError("decoder config: model_dim " + std::to_string(model_dim) +
                      " is not divisible by num_heads " + std::to_string(num_heads));
  }
}

namespace {

void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ConfigError(std::string("decoder weights: ") + name + " is " +
                      std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ", expected " +
                      std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void expect_len(const std::vector<double>& v, std::size_t n, const char* name) {
  if (v.size() != n) {
    throw ConfigError(std::string("decoder weights: ") + name + " has length " +
                      std::to_string(v.size()) + ", expected " + std::to_string(n));
  }
}

}  // namespace

DecoderWeights::DecoderWeights(DecoderConfig config, std::uint32_t seed, Matrix embedding,
                               std::vector<LayerWeights> layers, std::vector<double> final_gamma,
                               std::vector<double> final_beta, Matrix output)
    : config_(config),
      seed_(seed),
      embedding_(std::move(embedding)),
      layers_(std::move(layers)),
      final_gamma_(std::move(final_gamma)),
      final_beta_(std::move(final_beta)),
      output_(std::move(output)) {
  config_.validate();
  const std::size_t d = config_.model_dim;
  const std::size_t f = config_.ffn_dim();
  expect_shape(embedding_, config_.vocab_size, d, "embedding");
  if (layers_.size() != config_.num_layers) {
    throw ConfigError("decoder weights: layer count does not match config");
  }
  for (const auto& l : layers_) {
    expect_len(l.ln1_gamma, d, "ln1_gamma");
    expect_len(l.ln1_beta, d, "ln1_beta");
    expect_shape(l.wq, d, d, "wq");
    expect_shape(l.wk, d, d, "wk");
    expect_shape(l.wv, d, d, "wv");
    expect_shape(l.wo, d, d, "wo");
    expect_len(l.ln2_gamma, d, "ln2_gamma");
    expect_len(l.ln2_beta, d, "ln2_beta");
    expect_shape(l.w1, d, f, "w1");
    expect_len(l.b1, f, "b1");
    expect_shape(l.w2, f, d, "w2");
    expect_len(l.b2, d, "b2");
  }
  expect_len(final_gamma_, d, "final_gamma");
  expect_len(final_beta_, d, "final_beta");
  expect_shape(output_, d, config_.vocab_size, "output");
}

DecoderWeights init_decoder(const DecoderConfig& config, std::uint32_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.model_dim));
  // Portable uniform draw: 53 high bits of the engine output.
  auto draw = [&] {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return (2.0 * unit - 1.0) * bound;
  };
  auto matrix = [&](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (double& v : m.data()) v = draw();
    return m;
  };
  auto vector = [&](std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = draw();
    return v;
  };
  const std::size_t d = config.model_dim;
  const std::size_t f = config.ffn_dim();
  Matrix embedding = matrix(config.vocab_size, d);
  std::vector<LayerWeights> layers(config.num_layers);
  for (auto& l : layers) {
    l.ln1_gamma.assign(d, 1.0);
    l.ln1_beta.assign(d, 0.0);
    l.wq = matrix(d, d);
    l.wk = matrix(d, d);
    l.wv = matrix(d, d);
    l.wo = matrix(d, d);
    l.ln2_gamma.assign(d, 1.0);
    l.ln2_beta.assign(d, 0.0);
    l.w1 = matrix(d, f);
    l.b1 = vector(f);
    l.w2 = matrix(f, d);
    l.b2 = vector(d);
  }
  Matrix output = matrix(d, config.vocab_size);
  return DecoderWeights(config, seed, std::move(embedding), std::move(layers),
                        std::vector<double>(d, 1.0), std::vector<double>(d, 0.0),
                        std::move(output));
}

// ---------------------------------------------------------------------------
// MaskPlan

void MaskPlan::set(std::size_t layer, AttentionMask mask) {
  layers_[layer] = {std::move(mask)};
}

void MaskPlan::set_per_head(std::size_t layer, std::vector<AttentionMask> masks) {
  if (masks.empty()) {
    throw MaskError("MaskPlan::set_per_head: no masks");
  }
  layers_[layer] = std::move(masks);
}

MaskPlan MaskPlan::extended(std::size_t new_size) const {
  MaskPlan out;
  for (const auto& [layer, masks] : layers_) {
    std::vector<AttentionMask> grown;
    grown.reserve(masks.size());
    for (const auto& m : masks) grown.push_back(m.extended(new_size));
    out.layers_[layer] = std::move(grown);
  }
  return out;
}

MaskPlan uniform_plan(const std::vector<std::size_t>& layers, const AttentionMask& mask) {
  MaskPlan plan;
  for (std::size_t l : layers) plan.set(l, mask);
  return plan;
}

// ---------------------------------------------------------------------------
// Forward pass

namespace {

using kernels::Backend;

struct RowsRun {
  std::vector<double> last_hidden;
  std::vector<std::vector<Matrix>> head_probs;  // per layer, per head: rows x T
  std::vector<Matrix> keys, values;             // per layer: T x d (including cache)
};

void add_inplace(Matrix& x, const Matrix& y) {
  auto& a = x.data();
  const auto& b = y.data();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

std::vector<double> final_logits(const DecoderWeights& w, std::vector<double> hidden,
                                 Backend backend) {
  const std::size_t d = w.config().model_dim;
  Matrix h(1, d);
  std::copy(hidden.begin(), hidden.end(), h.row(0).begin());
  if (w.config().layer_norm) h = kernels::layer_norm(h, w.final_gamma(), w.final_beta(), backend);
  Matrix logits = kernels::matmul(h, w.output(), backend);
  return logits.data();
}

// Evaluates rows [cache_size, tokens.size()) through every layer. `masks`
// holds, per layer, the additive T x T masks (one shared or one per head).
RowsRun run_rows(const DecoderWeights& w, const std::vector<TokenId>& tokens,
                 const std::vector<std::vector<const Matrix*>>& masks, const PrefixCache* cache,
                 bool keep_probs, bool keep_kv, Backend backend) {
  const auto& cfg = w.config();
  const std::size_t d = cfg.model_dim;
  const std::size_t offset = cache ? cache->size() : 0;
  const std::size_t n = tokens.size() - offset;

  Matrix x(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    const TokenId id = tokens[offset + r];
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
      throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
    }
    auto src = w.embedding().row(static_cast<std::size_t>(id));
    std::copy(src.begin(), src.end(), x.row(r).begin());
  }

  RowsRun run;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const LayerWeights& lw = w.layers()[l];
    const Matrix h = cfg.layer_norm ? kernels::layer_norm(x, lw.ln1_gamma, lw.ln1_beta, backend) : x;
    const Matrix q = kernels::matmul(h, lw.wq, backend);
    Matrix k = kernels::matmul(h, lw.wk, backend);
    Matrix v = kernels::matmul(h, lw.wv, backend);
    if (cache) {
      Matrix kc = cache->keys[l];
      Matrix vc = cache->values[l];
      kc.append_rows(k);
      vc.append_rows(v);
      k = std::move(kc);
      v = std::move(vc);
    }
    kernels::AttentionInputs in{q, k, v, cfg.num_heads, offset, masks[l]};
    kernels::AttentionOutput att = kernels::attention(in, backend);
    add_inplace(x, kernels::matmul(att.context, lw.wo, backend));

    const Matrix h2 =
        cfg.layer_norm ? kernels::layer_norm(x, lw.ln2_gamma, lw.ln2_beta, backend) : x;
    Matrix f = kernels::matmul(h2, lw.w1, backend);
    kernels::add_row_vector(f, lw.b1, backend);
    kernels::gelu_inplace(f, backend);
    Matrix f2 = kernels::matmul(f, lw.w2, backend);
    kernels::add_row_vector(f2, lw.b2, backend);
    add_inplace(x, f2);

    if (keep_probs) run.head_probs.push_back(std::move(att.probs));
    if (keep_kv) {
      run.keys.push_back(std::move(k));
      run.values.push_back(std::move(v));
    }
  }
  if (n > 0) {
    auto last = x.row(n - 1);
    run.last_hidden.assign(last.begin(), last.end());
  } else {
    run.last_hidden = cache->last_hidden;
  }
  return run;
}

// Causal-only additive mask, shared by layers the plan leaves alone.
Matrix causal_additive(std::size_t t) { return build_causal_mask(t).additive(); }

Matrix effective_mask(const AttentionMask& causal, const AttentionMask& extra,
                      std::size_t layer, std::size_t& guarded) {
  const std::size_t t = causal.size();
  AttentionMask combined = combine_masks(causal, extra);
  Matrix out = combined.additive();
  for (std::size_t i = 0; i < t; ++i) {
    bool open = false;
    for (std::size_t j = 0; j <= i && !open; ++j) open = !combined.blocked(i, j);
    if (open) continue;
    auto row = out.row(i);
    auto causal_row = causal.additive().row(i);
    std::copy(causal_row.begin(), causal_row.end(), row.begin());
    ++guarded;
    log::warn("layer " + std::to_string(layer) + ", row " + std::to_string(i) +
              ": plan mask would block every position; using the causal mask for this row");
  }
  return out;
}

bool plan_touches_rows(const MaskPlan& plan, std::size_t rows) {
  for (const auto& [layer, masks] : plan.layers()) {
    for (const auto& m : masks) {
      for (std::size_t i = 0; i < std::min(rows, m.size()); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
          if (m.blocked(i, j)) return true;
        }
      }
    }
  }
  return false;
}

void validate_plan(const MaskPlan& plan, const DecoderConfig& cfg, std::size_t t) {
  for (const auto& [layer, masks] : plan.layers()) {
    if (layer >= cfg.num_layers) {
      throw MaskError("mask plan names layer " + std::to_string(layer) + " but the decoder has " +
                      std::to_string(cfg.num_layers));
    }
    if (masks.size() != 1 && masks.size() != cfg.num_heads) {
      throw MaskError("mask plan layer " + std::to_string(layer) +
                      ": need one mask or one per head");
    }
    for (const auto& m : masks) {
      if (m.size() != t) {
        throw MaskError("mask plan layer " + std::to_string(layer) + ": mask is " +
                        std::to_string(m.size()) + "x" + std::to_string(m.size()) +
                        ", sequence has " + std::to_string(t) + " tokens");
      }
    }
  }
}

}  // namespace

ForwardResult forward(const DecoderWeights& weights, const RoleMap& rm, const MaskPlan& plan,
                      const ForwardOptions& options) {
  const auto& cfg = weights.config();
  const std::size_t t = rm.size();
  if (t == 0) {
    throw MaskError("forward: empty sequence");
  }
  validate_plan(plan, cfg, t);

  const PrefixCache* cache = options.cache;
  std::size_t offset = 0;
  if (cache && cache->size() > 0) {
    offset = cache->size();
    if (offset > rm.non_text_prefix() ||
        !std::equal(cache->tokens.begin(), cache->tokens.end(), rm.tokens().begin())) {
      throw MaskError("forward: cache does not match the sequence's non-text prefix");
    }
    if (cache->keys.size() != cfg.num_layers) {
      throw MaskError("forward: cache was built for a different decoder");
    }
    if (plan_touches_rows(plan, offset)) {
      throw MaskError("forward: plan masks cached prefix rows");
    }
  } else {
    cache = nullptr;
  }

  ForwardResult result;
  const AttentionMask causal = build_causal_mask(t);
  // Storage for effective masks; pointers into it are handed to the kernels.
  std::vector<std::vector<Matrix>> storage(cfg.num_layers);
  std::vector<std::vector<const Matrix*>> masks(cfg.num_layers);
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const auto it = plan.layers().find(l);
    if (it == plan.layers().end()) {
      storage[l].push_back(causal.additive());
    } else {
      for (const auto& m : it->second) {
        storage[l].push_back(effective_mask(causal, m, l, result.guarded_rows));
      }
    }
    for (const auto& m : storage[l]) masks[l].push_back(&m);
  }

  const bool keep_probs = options.capture_attention || options.capture_head_attention;
  RowsRun run = run_rows(weights, rm.tokens(), masks, cache, keep_probs, options.capture_kv,
                         options.backend);
  result.logits = final_logits(weights, run.last_hidden, options.backend);

  if (keep_probs) {
    const std::size_t heads = cfg.num_heads;
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
      std::vector<Matrix> full(heads, Matrix(t, t));
      for (std::size_t h = 0; h < heads; ++h) {
        if (cache) {
          const Matrix& pre = cache->head_probs[l][h];
          for (std::size_t i = 0; i < offset; ++i) {
            std::copy(pre.row(i).begin(), pre.row(i).end(), full[h].row(i).begin());
          }
        }
        const Matrix& rows = run.head_probs[l][h];
        for (std::size_t r = 0; r < rows.rows(); ++r) {
          std::copy(rows.row(r).begin(), rows.row(r).end(), full[h].row(offset + r).begin());
        }
      }
      if (options.capture_attention) {
        Matrix avg(t, t);
        for (std::size_t h = 0; h < heads; ++h) {
          auto& a = avg.data();
          const auto& p = full[h].data();
          for (std::size_t i = 0; i < a.size(); ++i) a[i] += p[i];
        }
        for (double& v : avg.data()) v /= static_cast<double>(heads);
        result.attention.push_back(std::move(avg));
      }
      if (options.capture_head_attention) result.head_attention.push_back(std::move(full));
    }
  }
  if (options.capture_kv) {
    result.keys = std::move(run.keys);
    result.values = std::move(run.values);
  }
  return result;
}

PrefixCache build_prefix_cache(const DecoderWeights& weights, const RoleMap& rm,
                               Backend backend) {
  const auto& cfg = weights.config();
  PrefixCache cache;
  const std::size_t p = rm.non_text_prefix();
  if (p == 0) return cache;
  cache.tokens.assign(rm.tokens().begin(), rm.tokens().begin() + static_cast<std::ptrdiff_t>(p));
  const Matrix causal = causal_additive(p);
  std::vector<std::vector<const Matrix*>> masks(cfg.num_layers, {&causal});
  RowsRun run = run_rows(weights, cache.tokens, masks, nullptr, true, true, backend);
  cache.keys = std::move(run.keys);
  cache.values = std::move(run.values);
  cache.head_probs = std::move(run.head_probs);
  cache.last_hidden = std::move(run.last_hidden);
  return cache;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("argmax of an empty vector");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<TokenId> greedy_decode(const DecoderWeights& weights, const RoleMap& rm,
                                   std::size_t steps, const MaskPlan& plan, Backend backend) {
  if (steps == 0) {
    throw std::invalid_argument("greedy_decode: steps must be >= 1");
  }
  const std::size_t prefix = rm.non_text_prefix();
  const PrefixCache cache = plan_touches_rows(plan, prefix) ? PrefixCache{}
                                                            : build_prefix_cache(weights, rm, backend);
  RoleMap current = rm;
  MaskPlan current_plan = plan;
  std::vector<TokenId> out;
  for (std::size_t s = 0; s < steps; ++s) {
    ForwardOptions opt;
    opt.backend = backend;
    opt.capture_attention = false;
    opt.cache = &cache;
    const auto result = forward(weights, current, current_plan, opt);
    const auto token = static_cast<TokenId>(argmax(result.logits));
    out.push_back(token);
    current = current.with_generated(token);
    current_plan = current_plan.extended(current.size());
  }
  return out;
}

std::vector<TokenId> greedy_decode(const DecoderWeights& weights, const RoleMap& rm,
                                   std::size_t steps, const PlanBuilder& builder,
                                   Backend backend) {
  if (steps == 0) {
    throw std::invalid_argument("greedy_decode: steps must be >= 1");
  }
  const PrefixCache cache = build_prefix_cache(weights, rm, backend);
  RoleMap current = rm;
  std::vector<TokenId> out;
  for (std::size_t s = 0; s < steps; ++s) {
    const MaskPlan plan = builder(current);
    ForwardOptions opt;
    opt.backend = backend;
    opt.capture_attention = false;
    opt.cache = plan_touches_rows(plan, cache.size()) ? nullptr : &cache;
    const auto result = forward(weights, current, plan, opt);
    const auto token = static_cast<TokenId>(argmax(result.logits));
    out.push_back(token);
    current = current.with_generated(token);
  }
  return out;
}

PlanBuilder t2t_plan_builder(std::vector<std::size_t> layers) {
  return [layers = std::move(layers)](const RoleMap& rm) {
    return uniform_plan(layers, build_t2t_mask(rm));
  };
}

}  // namespace mvh

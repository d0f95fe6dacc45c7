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

// Small deterministic transformer decoder with per-layer additive-mask
// injection.
//
// Layer l computes, for the rows being evaluated,
//
//   h  = LN1(x);  A = softmax(h Wq (h Wk)^T / sqrt(head_dim) + M_l)
//   x += (A (h Wv)) Wo
//   x += W2 gelu(W1 LN2(x) + b1) + b2
//
// where M_l is the causal mask combined with the plan's mask for layer l.
// Logits are read from the last position: Wout^T LNf(x_T-1). With
// `layer_norm` off, every LN is the identity.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvh/kernels.hpp"
#include "mvh/mask.hpp"
#include "mvh/matrix.hpp"
#include "mvh/token_roles.hpp"

namespace mvh {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DecoderConfig {
  std::size_t num_layers = 8;
  std::size_t model_dim = 32;
  std::size_t num_heads = 4;
  std::size_t vocab_size = 64;
  bool layer_norm = true;

  std::size_t head_dim() const { return model_dim / num_heads; }
  std::size_t ffn_dim() const { return 4 * model_dim; }

  /// Throws ConfigError unless every count is >= 1 and heads divide model_dim.
  void validate() const;

  friend bool operator==(const DecoderConfig&, const DecoderConfig&) = default;
};

struct LayerWeights {
  std::vector<double> ln1_gamma, ln1_beta;
  Matrix wq, wk, wv, wo;  // model_dim x model_dim
  std::vector<double> ln2_gamma, ln2_beta;
  Matrix w1;  // model_dim x ffn_dim
  std::vector<double> b1;
  Matrix w2;  // ffn_dim x model_dim
  std::vector<double> b2;

  friend bool operator==(const LayerWeights&, const LayerWeights&) = default;
};

/// Immutable weight set. Construction validates every shape against the
/// config.
class DecoderWeights {
 public:
  DecoderWeights(DecoderConfig config, std::uint32_t seed, Matrix embedding,
                 std::vector<LayerWeights> layers, std::vector<double> final_gamma,
                 std::vector<double> final_beta, Matrix output);

  const DecoderConfig& config() const { return config_; }
  std::uint32_t seed() const { return seed_; }
  const Matrix& embedding() const { return embedding_; }
  const std::vector<LayerWeights>& layers() const { return layers_; }
  const std::vector<double>& final_gamma() const { return final_gamma_; }
  const std::vector<double>& final_beta() const { return final_beta_; }
  const Matrix& output() const { return output_; }  // model_dim x vocab

  friend bool operator==(const DecoderWeights&, const DecoderWeights&) = default;

 private:
  DecoderConfig config_;
  std::uint32_t seed_;
  Matrix embedding_;  // vocab x model_dim
  std::vector<LayerWeights> layers_;
  std::vector<double> final_gamma_, final_beta_;
  Matrix output_;
};

/// Seeded uniform init in [-1/sqrt(model_dim), 1/sqrt(model_dim)]; layer
/// norm gains start at 1 and shifts at 0. Same (config, seed) gives
/// bit-identical weights on every platform.
DecoderWeights init_decoder(const DecoderConfig& config, std::uint32_t seed);

/// Flat binary snapshot: little-endian u32 header (num_layers, model_dim,
/// num_heads, vocab_size, layer_norm, seed) followed by little-endian f64
/// matrices, row-major, in declaration order (embedding; per layer ln1_gamma,
/// ln1_beta, wq, wk, wv, wo, ln2_gamma, ln2_beta, w1, b1, w2, b2; final_gamma,
/// final_beta, output).
void save_weights(const DecoderWeights& weights, std::ostream& out);
DecoderWeights load_weights(std::istream& in);
void save_weights(const DecoderWeights& weights, const std::string& path);
DecoderWeights load_weights(const std::string& path);

/// Per-layer extra masks. A layer maps to one mask shared by all heads or to
/// one mask per head. Layers without an entry get the causal mask only.
class MaskPlan {
 public:
  void set(std::size_t layer, AttentionMask mask);
  void set_per_head(std::size_t layer, std::vector<AttentionMask> masks);

  bool empty() const { return layers_.empty(); }
  const std::map<std::size_t, std::vector<AttentionMask>>& layers() const { return layers_; }

  /// Grows every mask to `new_size`; appended rows and columns are open.
  MaskPlan extended(std::size_t new_size) const;

 private:
  std::map<std::size_t, std::vector<AttentionMask>> layers_;
};

/// Plan applying one mask at each of the given layers.
MaskPlan uniform_plan(const std::vector<std::size_t>& layers, const AttentionMask& mask);

/// Keys, values and attention rows of the leading non-text prefix. Masks that
/// only touch text rows cannot change any of these, so both passes of a
/// contrastive step can share one cache.
struct PrefixCache {
  std::vector<TokenId> tokens;
  std::vector<Matrix> keys;                     // per layer: P x model_dim
  std::vector<Matrix> values;                   // per layer: P x model_dim
  std::vector<std::vector<Matrix>> head_probs;  // per layer, per head: P x P
  std::vector<double> last_hidden;              // final-layer state of row P-1

  std::size_t size() const { return tokens.size(); }
};

struct ForwardOptions {
  kernels::Backend backend = kernels::Backend::parallel;
  bool capture_attention = true;       // head-averaged A per layer
  bool capture_head_attention = false; // per-head A per layer
  bool capture_kv = false;             // full K and V per layer
  const PrefixCache* cache = nullptr;  // reuse for rows [0, cache->size())
};

struct ForwardResult {
  std::vector<double> logits;
  std::vector<AttentionMatrix> attention;         // per layer, T x T
  std::vector<std::vector<Matrix>> head_attention;  // per layer, per head
  std::vector<Matrix> keys, values;               // per layer, T x model_dim
  std::size_t guarded_rows = 0;  // rows where the plan was dropped
};

/// Builds the cache for rm's leading non-text prefix (may be empty).
PrefixCache build_prefix_cache(const DecoderWeights& weights, const RoleMap& rm,
                               kernels::Backend backend = kernels::Backend::parallel);

/// Runs the decoder over rm. Throws MaskError if a plan layer is out of range,
/// a plan mask is not T x T, or a cache is given whose tokens do not prefix
/// rm or whose rows the plan would alter.
///
/// If the causal mask combined with the plan leaves a row with no open entry,
/// the plan is dropped for that row and the event is counted and logged.
ForwardResult forward(const DecoderWeights& weights, const RoleMap& rm, const MaskPlan& plan,
                      const ForwardOptions& options = {});

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

using PlanBuilder = std::function<MaskPlan(const RoleMap&)>;

/// Greedy decoding with a fixed plan. The plan is sized for rm; each step
/// extends it with open rows and columns for the generated token.
std::vector<TokenId> greedy_decode(const DecoderWeights& weights, const RoleMap& rm,
                                   std::size_t steps, const MaskPlan& plan = {},
                                   kernels::Backend backend = kernels::Backend::parallel);

/// Greedy decoding with a plan rebuilt from the current sequence at every
/// step, so generated tokens follow the same masking rule as the prompt.
std::vector<TokenId> greedy_decode(const DecoderWeights& weights, const RoleMap& rm,
                                   std::size_t steps, const PlanBuilder& builder,
                                   kernels::Backend backend = kernels::Backend::parallel);

/// Builder blocking text-to-text attention at the given layers.
PlanBuilder t2t_plan_builder(std::vector<std::size_t> layers);

}  // namespace mvh

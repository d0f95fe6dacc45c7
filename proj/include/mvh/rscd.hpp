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

// Reference shift contrastive decoding.
//
// Each step runs the decoder twice over the same sequence:
//   base      plain causal attention; A is captured at every layer.
//   negative  at each layer in the selected range, every text row
//             additionally loses its top-rho share of visible text
//             columns, ranked by the base pass's A.
// The emitted token is argmax of (1 + alpha) * base - alpha * negative,
// restricted to tokens whose base probability is at least beta times the
// base maximum.
//
// The reference shift mask only touches text rows, so the negative pass
// reuses the base pass's cached system/image keys and values.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvh/decoder.hpp"
#include "mvh/token_roles.hpp"

namespace mvh {

/// Inclusive, contiguous range of decoder layers.
struct LayerRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::vector<std::size_t> layers() const;
  bool contains(std::size_t layer) const { return layer >= first && layer <= last; }
  friend bool operator==(const LayerRange&, const LayerRange&) = default;
};

struct RSCDConfig {
  double alpha = 1.0;
  double rho = 0.8;
  std::optional<LayerRange> layers;
  double beta = 0.1;
  bool per_head_selection = false;  // rank per head instead of on the head mean

  /// Throws ConfigError on alpha < 0, rho outside [0, 1], beta outside
  /// (0, 1], a missing range, or a range outside [0, num_layers).
  void validate(std::size_t num_layers) const;
};

/// (1 + alpha) * base - alpha * negative, then every token whose base softmax
/// probability is below beta * max probability is set to kNegInf. Throws
/// std::invalid_argument on a length mismatch or beta outside (0, 1].
std::vector<double> contrast_logits(std::span<const double> base,
                                    std::span<const double> negative, double alpha, double beta);

struct RSCDStep {
  TokenId base_token;
  TokenId token;
  std::vector<double> base_logits;
  std::vector<double> negative_logits;
  std::vector<double> contrasted;
  MaskPlan negative_plan;
};

/// One contrastive step on rm. `cache` may be null or a cache of rm's
/// non-text prefix; both passes share it.
RSCDStep rscd_step(const DecoderWeights& weights, const RoleMap& rm, const RSCDConfig& config,
                   const PrefixCache* cache,
                   kernels::Backend backend = kernels::Backend::parallel);

/// Full decode: `steps` contrastive steps, each appending its token as text.
std::vector<TokenId> rscd_decode(const DecoderWeights& weights, const RoleMap& rm,
                                 std::size_t steps, const RSCDConfig& config,
                                 kernels::Backend backend = kernels::Backend::parallel);

/// Fraction of exact matches. Throws std::invalid_argument on empty input or
/// a length mismatch.
double reference_accuracy(std::span<const TokenId> outputs, std::span<const TokenId> expected);

struct GroundingTask {
  RoleMap prompt;
  TokenId expected;
};

enum class SweepMask { t2t, reference_shift };

struct SweepConfig {
  std::size_t window = 2;
  std::vector<GroundingTask> tasks;
  SweepMask mask = SweepMask::t2t;
  double rho = 0.8;  // reference_shift only
};

struct SweepPoint {
  std::size_t window_start;
  double accuracy;
};

/// Reference accuracy with the chosen mask applied at layers [s, s + w), for
/// every s in 0..L-w. Tasks are answered with one greedy token. Throws
/// ConfigError if w is 0 or exceeds L, std::invalid_argument if there are no
/// tasks.
std::vector<SweepPoint> layer_sweep(const DecoderWeights& weights, const SweepConfig& sweep);

/// Union of windows whose accuracy falls strictly below mean - stddev
/// (population). Without such a window, the single lowest window, earliest on
/// ties. A non-contiguous union is cut down to the run holding the lowest
/// qualifying window. Throws std::invalid_argument on an empty sweep.
LayerRange select_layer_range(std::span<const SweepPoint> sweep, std::size_t window);

/// Built-in profiles: "qwen2.5-vl-7b" (1.0, 0.7, 12..20), "llava-onevision-7b"
/// (1.0, 0.8, 13..20) and "toy" (1.0, 0.8, range left unset for
/// select_layer_range to fill). All use beta = 0.1. Throws ConfigError for
/// an unknown name.
RSCDConfig named_profile(std::string_view name);
std::vector<std::string> profile_names();

/// Applies `key = value` lines (keys alpha, rho, layer_start, layer_end,
/// beta; '#' starts a comment) on top of `base`. Throws ConfigError with the
/// line number on malformed input.
RSCDConfig parse_profile(std::string_view text, RSCDConfig base = {});
RSCDConfig load_profile(const std::string& path, RSCDConfig base = {});

}  // namespace mvh

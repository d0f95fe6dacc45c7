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

// Hand-wired 4-layer decoder for the synthetic grounding task.
//
// Prompt:  [SYS] [IMG(1, a)] [IMG(2, b)] [VIEW] [NUM_q] [QEND]
// Answer:  SYMBOL(a) when q = 1, SYMBOL(b) when q = 2.
//
// Circuit (single head, no layer norm, no feed-forward):
//   layer 0  inert
//   layer 1  every token attends NUM_q and copies q into a query-view
//            register. This is the only step that needs text-to-text
//            attention.
//   layer 2  the query-view register selects the image token of view q;
//            its symbol is copied into a readout register.
//   layer 3  inert
//   head     SYMBOL(s) scores kSymbolGain * readout[s]; DEFAULT scores
//            kDefaultLogit.
//
// Blocking text-to-text attention at layer 1 zeroes the query-view
// register, layer 2 then spreads attention evenly and the DEFAULT token
// wins regardless of the queried view.
//
// With the distractor bias, image tokens carrying a salient symbol get an
// extra kSalience key score that competes with the view match, so greedy
// decoding answers with the salient symbol when it sits in the other view.

#pragma once

#include <cstddef>
#include <vector>

#include "mvh/decoder.hpp"
#include "mvh/token_roles.hpp"

namespace mvh::grounding {

inline constexpr double kAggregationGain = 8.0;
inline constexpr double kRetrievalGain = 4.0;
inline constexpr double kSalience = 4.5;
inline constexpr double kSymbolGain = 8.0;
inline constexpr double kDefaultLogit = 3.0;
inline constexpr int kSalientSymbol = 0;

inline constexpr std::size_t kAggregationLayer = 1;
inline constexpr std::size_t kRetrievalLayer = 2;
inline constexpr std::size_t kNumLayers = 4;

/// Token layout of the grounding vocabulary.
struct Vocabulary {
  std::size_t num_symbols;

  static constexpr TokenId system() { return 0; }
  static constexpr TokenId view_word() { return 1; }
  static constexpr TokenId view_number(int view) { return 1 + view; }  // views 1, 2
  static constexpr TokenId query_end() { return 4; }
  static constexpr TokenId default_token() { return 5; }
  TokenId symbol(int s) const { return static_cast<TokenId>(6 + s); }
  TokenId image(int view, int s) const {
    return static_cast<TokenId>(6 + num_symbols * static_cast<std::size_t>(view) + s);
  }
  std::size_t size() const { return 6 + 3 * num_symbols; }
};

struct Preset {
  Vocabulary vocab;
  DecoderWeights weights;
};

/// Builds the preset. Throws ConfigError if num_symbols < 2.
Preset grounding_preset(std::size_t num_symbols, bool distractor_bias = false);

struct Instance {
  int view1_symbol;
  int view2_symbol;
  int queried_view;  // 1 or 2

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Every (a, b, q) with a != b, in (a, b, q) lexicographic order.
std::vector<Instance> all_instances(std::size_t num_symbols);

RoleMap instance_prompt(const Vocabulary& vocab, const Instance& instance);
TokenId expected_answer(const Vocabulary& vocab, const Instance& instance);

}  // namespace mvh::grounding

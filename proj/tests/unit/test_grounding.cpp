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

#include <set>

#include "frozen/grounding_expected.hpp"
#include "mvh/grounding.hpp"
#include "mvh/rscd.hpp"

namespace g = mvh::grounding;

namespace {

mvh::TokenId answer(const mvh::DecoderWeights& w, const mvh::RoleMap& rm,
                    const mvh::MaskPlan& plan = {}) {
  return static_cast<mvh::TokenId>(mvh::argmax(mvh::forward(w, rm, plan).logits));
}

}  // namespace

TEST_CASE("preset shape") {
  const auto p = g::grounding_preset(8);
  CHECK(p.weights.config().num_layers == 4);
  CHECK(p.weights.config().vocab_size == 30);
  CHECK(p.weights.config().num_heads == 1);
  CHECK(!p.weights.config().layer_norm);
  CHECK(g::all_instances(8).size() == 112);
  CHECK_THROWS_AS(g::grounding_preset(1), mvh::ConfigError);
}

TEST_CASE("vocabulary tokens are distinct") {
  const g::Vocabulary v{5};
  std::set<mvh::TokenId> seen = {g::Vocabulary::system(), g::Vocabulary::view_word(),
                                 g::Vocabulary::view_number(1), g::Vocabulary::view_number(2),
                                 g::Vocabulary::query_end(), g::Vocabulary::default_token()};
  for (int s = 0; s < 5; ++s) {
    seen.insert(v.symbol(s));
    seen.insert(v.image(1, s));
    seen.insert(v.image(2, s));
  }
  CHECK(seen.size() == v.size());
  CHECK(static_cast<std::size_t>(*seen.rbegin()) == v.size() - 1);
}

TEST_CASE("unmasked preset answers with the queried view's symbol") {
  for (std::size_t n : {2u, 3u, 8u}) {
    const auto p = g::grounding_preset(n);
    for (const auto& inst : g::all_instances(n)) {
      const auto rm = g::instance_prompt(p.vocab, inst);
      CHECK(answer(p.weights, rm) == g::expected_answer(p.vocab, inst));
      CHECK(mvh::greedy_decode(p.weights, rm, 1)[0] == g::expected_answer(p.vocab, inst));
    }
  }
}

TEST_CASE("text-to-text blocking at the aggregation layer loses the view") {
  const auto p = g::grounding_preset(8);
  for (const auto& inst : g::all_instances(8)) {
    const auto rm = g::instance_prompt(p.vocab, inst);
    const auto plan = mvh::uniform_plan({g::kAggregationLayer}, mvh::build_t2t_mask(rm));
    auto other = inst;
    other.queried_view = 3 - inst.queried_view;
    const auto rm2 = g::instance_prompt(p.vocab, other);
    const auto plan2 = mvh::uniform_plan({g::kAggregationLayer}, mvh::build_t2t_mask(rm2));
    const auto a = answer(p.weights, rm, plan);
    CHECK(a == answer(p.weights, rm2, plan2));
    CHECK(a == g::Vocabulary::default_token());
  }
}

TEST_CASE("blocking after aggregation keeps the answer") {
  const auto p = g::grounding_preset(8);
  for (const auto& inst : g::all_instances(8)) {
    const auto rm = g::instance_prompt(p.vocab, inst);
    for (std::size_t l : {0u, 2u, 3u}) {
      const auto plan = mvh::uniform_plan({l}, mvh::build_t2t_mask(rm));
      CHECK(answer(p.weights, rm, plan) == g::expected_answer(p.vocab, inst));
    }
  }
}

TEST_CASE("t2t sweep matches the frozen oracle") {
  for (bool biased : {false, true}) {
    const auto p = g::grounding_preset(mvh::frozen::kNumSymbols, biased);
    mvh::SweepConfig sweep;
    sweep.window = 2;
    for (const auto& inst : g::all_instances(mvh::frozen::kNumSymbols)) {
      sweep.tasks.push_back({g::instance_prompt(p.vocab, inst), g::expected_answer(p.vocab, inst)});
    }
    const auto points = mvh::layer_sweep(p.weights, sweep);
    const auto& expected = biased ? mvh::frozen::kBiasedSweep : mvh::frozen::kUnbiasedSweep;
    REQUIRE(points.size() == expected.size());
    for (std::size_t s = 0; s < points.size(); ++s) {
      CHECK(points[s].window_start == s);
      CHECK(points[s].accuracy == doctest::Approx(expected[s]).epsilon(1e-12));
    }
  }
}

TEST_CASE("biased preset: greedy fails exactly where the oracle says") {
  const auto p = g::grounding_preset(8, true);
  std::set<std::tuple<int, int, int>> failures;
  for (const auto& inst : g::all_instances(8)) {
    const auto rm = g::instance_prompt(p.vocab, inst);
    if (answer(p.weights, rm) != g::expected_answer(p.vocab, inst)) {
      failures.insert({inst.view1_symbol, inst.view2_symbol, inst.queried_view});
    }
  }
  std::set<std::tuple<int, int, int>> expected;
  for (const auto& c : mvh::frozen::kImprovementSet) {
    expected.insert({c.view1_symbol, c.view2_symbol, c.queried_view});
  }
  CHECK(failures == expected);
}

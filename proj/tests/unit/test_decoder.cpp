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

#include <random>
#include <sstream>

#include "mvh/decoder.hpp"

using mvh::DecoderConfig;
using mvh::ForwardOptions;
using mvh::MaskPlan;
using mvh::RoleMap;
using mvh::kernels::Backend;

namespace {

RoleMap random_prompt(std::mt19937_64& rng, std::size_t vocab) {
  const auto tok = [&] { return static_cast<mvh::TokenId>(rng() % vocab); };
  std::vector<mvh::TokenId> sys(1 + rng() % 2), v1(1 + rng() % 4), v2(1 + rng() % 4),
      text(1 + rng() % 4);
  for (auto* part : {&sys, &v1, &v2, &text}) {
    for (auto& t : *part) t = tok();
  }
  return mvh::build_sequence(sys, {{1, v1}, {2, v2}}, text);
}

}  // namespace

TEST_CASE("config validation") {
  DecoderConfig bad;
  bad.model_dim = 6;
  bad.num_heads = 4;
  CHECK_THROWS_AS(bad.validate(), mvh::ConfigError);
  DecoderConfig zero;
  zero.num_layers = 0;
  CHECK_THROWS_AS(zero.validate(), mvh::ConfigError);
  CHECK_NOTHROW(DecoderConfig{}.validate());
  CHECK(DecoderConfig{}.head_dim() == 8);
}

TEST_CASE("init is deterministic per seed and bounded") {
  const DecoderConfig cfg;
  const auto a = mvh::init_decoder(cfg, 7);
  const auto b = mvh::init_decoder(cfg, 7);
  const auto c = mvh::init_decoder(cfg, 8);
  CHECK(a == b);
  CHECK(!(a == c));
  const double bound = 1.0 / std::sqrt(32.0);
  for (double v : a.layers()[3].wq.data()) CHECK(std::abs(v) <= bound);
  CHECK(a.layers()[0].ln1_gamma == std::vector<double>(32, 1.0));
  CHECK(a.seed() == 7);
}

TEST_CASE("weights snapshot round-trip") {
  DecoderConfig cfg;
  cfg.num_layers = 2;
  cfg.model_dim = 8;
  cfg.num_heads = 2;
  cfg.vocab_size = 11;
  const auto w = mvh::init_decoder(cfg, 3);
  std::stringstream buf;
  mvh::save_weights(w, buf);
  const std::string bytes = buf.str();
  const std::size_t f = 4 * 8;
  const std::size_t values = 11 * 8 + 2 * (4 * 8 + 4 * 64 + 2 * 8 * f + f + 8) + 2 * 8 + 8 * 11;
  CHECK(bytes.size() == 6 * 4 + 8 * values);
  CHECK(static_cast<unsigned char>(bytes[0]) == 2);  // little-endian num_layers
  std::stringstream in(bytes);
  CHECK(mvh::load_weights(in) == w);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(mvh::load_weights(truncated), mvh::ConfigError);
  std::stringstream trailing(bytes + "x");
  CHECK_THROWS_AS(mvh::load_weights(trailing), mvh::ConfigError);
  std::string bad_heads = bytes;
  bad_heads[8] = 3;  // num_heads = 3 does not divide 8
  std::stringstream bh(bad_heads);
  CHECK_THROWS_AS(mvh::load_weights(bh), mvh::ConfigError);
}

TEST_CASE("forward shapes, purity and attention rows") {
  const auto w = mvh::init_decoder(DecoderConfig{}, 1);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const RoleMap rm = random_prompt(rng, 64);
    const auto r1 = mvh::forward(w, rm, {});
    const auto r2 = mvh::forward(w, rm, {});
    CHECK(r1.logits.size() == 64);
    CHECK(r1.logits == r2.logits);
    REQUIRE(r1.attention.size() == 8);
    for (const auto& a : r1.attention) {
      for (std::size_t i = 0; i < rm.size(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < rm.size(); ++j) {
          if (j > i) CHECK(a(i, j) == 0.0);
          sum += a(i, j);
        }
        CHECK(std::abs(sum - 1.0) < 1e-6);
      }
    }
  }
}

TEST_CASE("empty plan equals a plan of all-zero masks") {
  const auto w = mvh::init_decoder(DecoderConfig{}, 2);
  std::mt19937_64 rng(6);
  const RoleMap rm = random_prompt(rng, 64);
  const MaskPlan zeros = mvh::uniform_plan({0, 1, 2, 3, 4, 5, 6, 7}, mvh::AttentionMask(rm.size()));
  CHECK(mvh::forward(w, rm, {}).logits == mvh::forward(w, rm, zeros).logits);
}

TEST_CASE("masking image columns changes the logits") {
  const auto w = mvh::init_decoder(DecoderConfig{}, 3);
  const RoleMap rm = mvh::build_sequence({1}, {{1, {10, 11, 12}}, {2, {13, 14}}}, {20, 21});
  mvh::AttentionMask m(rm.size());
  for (std::size_t i = 0; i < rm.size(); ++i) {
    for (std::size_t j : rm.image_indices()) {
      if (i != j) m.block(i, j);
    }
  }
  const auto plan = mvh::uniform_plan({0, 1, 2, 3, 4, 5, 6, 7}, m);
  const auto masked = mvh::forward(w, rm, plan);
  CHECK(masked.logits != mvh::forward(w, rm, {}).logits);
  for (std::size_t l = 0; l < 8; ++l) {
    for (std::size_t i = 0; i < rm.size(); ++i) {
      for (std::size_t j = 0; j < rm.size(); ++j) {
        if (m.blocked(i, j)) CHECK(masked.attention[l](i, j) == 0.0);
      }
    }
  }
}

TEST_CASE("plan validation") {
  const auto w = mvh::init_decoder(DecoderConfig{}, 4);
  const RoleMap rm = mvh::build_sequence({1}, {{1, {2}}}, {3});
  MaskPlan wrong_size;
  wrong_size.set(0, mvh::AttentionMask(4));
  CHECK_THROWS_AS(mvh::forward(w, rm, wrong_size), mvh::MaskError);
  MaskPlan wrong_layer;
  wrong_layer.set(8, mvh::AttentionMask(3));
  CHECK_THROWS_AS(mvh::forward(w, rm, wrong_layer), mvh::MaskError);
  MaskPlan wrong_heads;
  wrong_heads.set_per_head(0, std::vector<mvh::AttentionMask>(3, mvh::AttentionMask(3)));
  CHECK_THROWS_AS(mvh::forward(w, rm, wrong_heads), mvh::MaskError);
  MaskPlan per_head;
  per_head.set_per_head(0, std::vector<mvh::AttentionMask>(4, mvh::AttentionMask(3)));
  CHECK_NOTHROW(mvh::forward(w, rm, per_head));
}

TEST_CASE("fully masked rows fall back to the causal mask") {
  const auto w = mvh::init_decoder(DecoderConfig{}, 5);
  const RoleMap rm = mvh::build_sequence({}, {}, {3, 4, 5});
  const MaskPlan plan = mvh::uniform_plan({2}, mvh::build_t2t_mask(rm));
  const auto r = mvh::forward(w, rm, plan);
  CHECK(r.guarded_rows == 3);
  CHECK(r.logits == mvh::forward(w, rm, {}).logits);

  const RoleMap mixed = mvh::build_sequence({1}, {}, {3, 4});
  const auto m = mvh::forward(w, mixed, mvh::uniform_plan({2}, mvh::build_t2t_mask(mixed)));
  CHECK(m.guarded_rows == 0);
}

TEST_CASE("prefix cache reproduces full recomputation exactly") {
  const auto w = mvh::init_decoder(DecoderConfig{}, 6);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const RoleMap rm = random_prompt(rng, 64);
    const auto cache = mvh::build_prefix_cache(w, rm);
    CHECK(cache.size() == rm.non_text_prefix());
    ForwardOptions full_opt;
    full_opt.capture_kv = true;
    full_opt.capture_head_attention = true;
    ForwardOptions cached_opt = full_opt;
    cached_opt.cache = &cache;
    const auto full = mvh::forward(w, rm, {}, full_opt);
    const auto cached = mvh::forward(w, rm, {}, cached_opt);
    CHECK(full.logits == cached.logits);
    CHECK(full.attention == cached.attention);
    CHECK(full.head_attention == cached.head_attention);
    for (std::size_t l = 0; l < 8; ++l) {
      CHECK(full.keys[l].slice_rows(0, cache.size()) == cache.keys[l]);
      CHECK(full.values[l].slice_rows(0, cache.size()) == cache.values[l]);
    }
  }
}

TEST_CASE("a cache is rejected when it does not fit") {
  const auto w = mvh::init_decoder(DecoderConfig{}, 8);
  const RoleMap rm = mvh::build_sequence({1}, {{1, {2, 3}}}, {4});
  const auto cache = mvh::build_prefix_cache(w, rm);
  ForwardOptions opt;
  opt.cache = &cache;
  const RoleMap other = mvh::build_sequence({1}, {{1, {2, 9}}}, {4});
  CHECK_THROWS_AS(mvh::forward(w, other, {}, opt), mvh::MaskError);
  mvh::AttentionMask touch(rm.size());
  touch.block(1, 0);
  MaskPlan plan;
  plan.set(0, touch);
  CHECK_THROWS_AS(mvh::forward(w, rm, plan, opt), mvh::MaskError);
}

TEST_CASE("serial and parallel backends give identical forwards") {
  const auto w = mvh::init_decoder(DecoderConfig{}, 9);
  std::mt19937_64 rng(10);
  const RoleMap rm = random_prompt(rng, 64);
  ForwardOptions s, p;
  s.backend = Backend::serial;
  p.backend = Backend::parallel;
  const auto a = mvh::forward(w, rm, {}, s);
  const auto b = mvh::forward(w, rm, {}, p);
  CHECK(a.logits == b.logits);
  CHECK(a.attention == b.attention);
}

TEST_CASE("greedy decode") {
  const auto w = mvh::init_decoder(DecoderConfig{}, 11);
  const RoleMap rm = mvh::build_sequence({1}, {{1, {2, 3}}}, {4, 5});
  const auto one = mvh::greedy_decode(w, rm, 1);
  CHECK(one[0] == static_cast<mvh::TokenId>(mvh::argmax(mvh::forward(w, rm, {}).logits)));
  const auto a = mvh::greedy_decode(w, rm, 6);
  CHECK(a == mvh::greedy_decode(w, rm, 6));
  CHECK(a.size() == 6);
  CHECK(a[0] == one[0]);

  // Step-by-step reference without any cache.
  RoleMap cur = rm;
  for (std::size_t s = 0; s < 6; ++s) {
    const auto t = static_cast<mvh::TokenId>(mvh::argmax(mvh::forward(w, cur, {}).logits));
    CHECK(t == a[s]);
    cur = cur.with_generated(t);
  }
  CHECK_THROWS(mvh::greedy_decode(w, rm, 0));
}

TEST_CASE("argmax ties go to the lowest index") {
  CHECK(mvh::argmax(std::vector<double>{1.0, 3.0, 3.0, 2.0}) == 1);
  CHECK(mvh::argmax(std::vector<double>{mvh::kNegInf, mvh::kNegInf}) == 0);
  CHECK_THROWS(mvh::argmax(std::vector<double>{}));
}

TEST_CASE("plan builder re-masks generated tokens") {
  const auto w = mvh::init_decoder(DecoderConfig{}, 12);
  const RoleMap rm = mvh::build_sequence({1}, {{1, {2, 3}}}, {4, 5});
  const auto builder = mvh::t2t_plan_builder({2, 3});
  const auto out = mvh::greedy_decode(w, rm, 4, builder);
  RoleMap cur = rm;
  for (std::size_t s = 0; s < 4; ++s) {
    const auto t = static_cast<mvh::TokenId>(
        mvh::argmax(mvh::forward(w, cur, mvh::uniform_plan({2, 3}, mvh::build_t2t_mask(cur))).logits));
    CHECK(t == out[s]);
    cur = cur.with_generated(t);
  }
}

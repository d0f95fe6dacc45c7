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

#include "mvh/rscd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mvh {

std::vector<std::size_t> LayerRange::layers() const {
  std::vector<std::size_t> out;
  for (std::size_t l = first; l <= last; ++l) out.push_back(l);
  return out;
}

void RSCDConfig::validate(std::size_t num_layers) const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("alpha must be a finite non-negative number");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ConfigError("rho must lie in [0, 1]");
  }
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw ConfigError("beta must lie in (0, 1]");
  }
  if (!layers) {
    throw ConfigError("layer range is not set");
  }
  if (layers->first > layers->last || layers->last >= num_layers) {
    throw ConfigError("layer range " + std::to_string(layers->first) + ".." +
                      std::to_string(layers->last) + " does not fit a " +
                      std::to_string(num_layers) + "-layer decoder");
  }
}

std::vector<double> contrast_logits(std::span<const double> base,
                                    std::span<const double> negative, double alpha, double beta) {
  if (base.size() != negative.size()) {
    throw std::invalid_argument("contrast_logits: base and negative lengths differ");
  }
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("contrast_logits: beta must lie in (0, 1]");
  }
  const std::size_t n = base.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (1.0 + alpha) * base[i] - alpha * negative[i];
  if (n == 0) return out;

  const double peak = *std::max_element(base.begin(), base.end());
  std::vector<double> prob(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    prob[i] = std::exp(base[i] - peak);
    sum += prob[i];
  }
  double best = 0.0;
  for (double& p : prob) {
    p /= sum;
    best = std::max(best, p);
  }
  const double cutoff = beta * best;
  for (std::size_t i = 0; i < n; ++i) {
    if (prob[i] < cutoff) out[i] = kNegInf;
  }
  return out;
}

RSCDStep rscd_step(const DecoderWeights& weights, const RoleMap& rm, const RSCDConfig& config,
                   const PrefixCache* cache, kernels::Backend backend) {
  const auto& cfg = weights.config();
  config.validate(cfg.num_layers);

  ForwardOptions base_opt;
  base_opt.backend = backend;
  base_opt.cache = cache;
  base_opt.capture_attention = !config.per_head_selection;
  base_opt.capture_head_attention = config.per_head_selection;
  const ForwardResult base = forward(weights, rm, {}, base_opt);

  RSCDStep step;
  for (std::size_t l : config.layers->layers()) {
    if (config.per_head_selection) {
      std::vector<AttentionMask> heads;
      for (const Matrix& a : base.head_attention[l]) {
        heads.push_back(build_reference_shift_mask(a, rm, config.rho));
      }
      step.negative_plan.set_per_head(l, std::move(heads));
    } else {
      step.negative_plan.set(l, build_reference_shift_mask(base.attention[l], rm, config.rho));
    }
  }

  ForwardOptions neg_opt;
  neg_opt.backend = backend;
  neg_opt.cache = cache;
  neg_opt.capture_attention = false;
  const ForwardResult negative = forward(weights, rm, step.negative_plan, neg_opt);

  step.base_logits = base.logits;
  step.negative_logits = negative.logits;
  step.contrasted = contrast_logits(base.logits, negative.logits, config.alpha, config.beta);
  step.base_token = static_cast<TokenId>(argmax(base.logits));
  step.token = static_cast<TokenId>(argmax(step.contrasted));
  return step;
}

std::vector<TokenId> rscd_decode(const DecoderWeights& weights, const RoleMap& rm,
                                 std::size_t steps, const RSCDConfig& config,
                                 kernels::Backend backend) {
  config.validate(weights.config().num_layers);
  if (steps == 0) {
    throw std::invalid_argument("rscd_decode: steps must be >= 1");
  }
  const PrefixCache cache = build_prefix_cache(weights, rm, backend);
  RoleMap current = rm;
  std::vector<TokenId> out;
  for (std::size_t s = 0; s < steps; ++s) {
    const RSCDStep step = rscd_step(weights, current, config, &cache, backend);
    out.push_back(step.token);
    current = current.with_generated(step.token);
  }
  return out;
}

double reference_accuracy(std::span<const TokenId> outputs, std::span<const TokenId> expected) {
  if (outputs.empty()) {
    throw std::invalid_argument("reference_accuracy: no tasks");
  }
  if (outputs.size() != expected.size()) {
    throw std::invalid_argument("reference_accuracy: outputs and oracle differ in length");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) hits += outputs[i] == expected[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(outputs.size());
}

namespace {

TokenId answer_with_window(const DecoderWeights& w, const GroundingTask& task,
                           const std::vector<std::size_t>& layers, const SweepConfig& sweep) {
  // Runs inside the parallel task loop, so the kernels stay serial.
  const auto backend = kernels::Backend::serial;
  MaskPlan plan;
  if (sweep.mask == SweepMask::t2t) {
    plan = uniform_plan(layers, build_t2t_mask(task.prompt));
  } else {
    ForwardOptions opt;
    opt.backend = backend;
    const ForwardResult base = forward(w, task.prompt, {}, opt);
    for (std::size_t l : layers) {
      plan.set(l, build_reference_shift_mask(base.attention[l], task.prompt, sweep.rho));
    }
  }
  ForwardOptions opt;
  opt.backend = backend;
  opt.capture_attention = false;
  return static_cast<TokenId>(argmax(forward(w, task.prompt, plan, opt).logits));
}

}  // namespace

std::vector<SweepPoint> layer_sweep(const DecoderWeights& weights, const SweepConfig& sweep) {
  const std::size_t num_layers = weights.config().num_layers;
  if (sweep.window == 0 || sweep.window > num_layers) {
    throw ConfigError("sweep window " + std::to_string(sweep.window) + " must lie in [1, " +
                      std::to_string(num_layers) + "]");
  }
  if (sweep.tasks.empty()) {
    throw std::invalid_argument("layer_sweep: no tasks");
  }
  const std::size_t windows = num_layers - sweep.window + 1;
  const std::size_t tasks = sweep.tasks.size();
  std::vector<TokenId> answers(windows * tasks);
  std::vector<TokenId> expected;
  for (const auto& t : sweep.tasks) expected.push_back(t.expected);

  const auto total = static_cast<std::ptrdiff_t>(windows * tasks);
  // Results land in fixed slots, so scheduling cannot reorder them.
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
    const auto i = static_cast<std::size_t>(idx);
    const std::size_t s = i / tasks;
    std::vector<std::size_t> layers;
    for (std::size_t l = s; l < s + sweep.window; ++l) layers.push_back(l);
    answers[i] = answer_with_window(weights, sweep.tasks[i % tasks], layers, sweep);
  }

  std::vector<SweepPoint> out;
  for (std::size_t s = 0; s < windows; ++s) {
    const std::span<const TokenId> slice(answers.data() + s * tasks, tasks);
    out.push_back({s, reference_accuracy(slice, expected)});
  }
  return out;
}

LayerRange select_layer_range(std::span<const SweepPoint> sweep, std::size_t window) {
  if (sweep.empty()) {
    throw std::invalid_argument("select_layer_range: empty sweep");
  }
  if (window == 0) {
    throw std::invalid_argument("select_layer_range: window must be >= 1");
  }
  const double n = static_cast<double>(sweep.size());
  double mean = 0.0;
  for (const auto& p : sweep) mean += p.accuracy;
  mean /= n;
  double var = 0.0;
  for (const auto& p : sweep) var += (p.accuracy - mean) * (p.accuracy - mean);
  const double threshold = mean - std::sqrt(var / n);

  std::size_t lowest = 0;
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    if (sweep[i].accuracy < sweep[lowest].accuracy) lowest = i;
  }
  const auto window_range = [&](std::size_t i) {
    return LayerRange{sweep[i].window_start, sweep[i].window_start + window - 1};
  };
  if (!(sweep[lowest].accuracy < threshold)) return window_range(lowest);

  // Grow from the lowest window across neighbouring qualifying windows whose
  // layers overlap or touch.
  LayerRange range = window_range(lowest);
  std::vector<bool> used(sweep.size(), false);
  used[lowest] = true;
  for (bool grew = true; grew;) {
    grew = false;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      if (used[i] || !(sweep[i].accuracy < threshold)) continue;
      const LayerRange r = window_range(i);
      if (r.first <= range.last + 1 && r.last + 1 >= range.first) {
        range.first = std::min(range.first, r.first);
        range.last = std::max(range.last, r.last);
        used[i] = true;
        grew = true;
      }
    }
  }
  return range;
}

RSCDConfig named_profile(std::string_view name) {
  RSCDConfig c;
  c.alpha = 1.0;
  c.beta = 0.1;
  if (name == "qwen2.5-vl-7b") {
    c.rho = 0.7;
    c.layers = LayerRange{12, 20};
  } else if (name == "llava-onevision-7b") {
    c.rho = 0.8;
    c.layers = LayerRange{13, 20};
  } else if (name == "toy") {
    c.rho = 0.8;
  } else {
    throw ConfigError("unknown profile '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> profile_names() { return {"qwen2.5-vl-7b", "llava-onevision-7b", "toy"}; }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& value, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw ConfigError("profile line " + std::to_string(line) + ": '" + value +
                      "' is not a number");
  }
  return v;
}

std::size_t parse_layer(const std::string& value, std::size_t line) {
  const double v = parse_number(value, line);
  if (v < 0 || v != std::floor(v)) {
    throw ConfigError("profile line " + std::to_string(line) + ": layer index '" + value +
                      "' must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

RSCDConfig parse_profile(std::string_view text, RSCDConfig base) {
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  std::optional<std::size_t> start, end;
  if (base.layers) {
    start = base.layers->first;
    end = base.layers->last;
  }
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(std::string_view(raw).substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("profile line " + std::to_string(line) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    if (key == "alpha") {
      base.alpha = parse_number(value, line);
    } else if (key == "rho") {
      base.rho = parse_number(value, line);
    } else if (key == "beta") {
      base.beta = parse_number(value, line);
    } else if (key == "layer_start") {
      start = parse_layer(value, line);
    } else if (key == "layer_end") {
      end = parse_layer(value, line);
    } else {
      throw ConfigError("profile line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
  if (start.has_value() != end.has_value()) {
    throw ConfigError("profile: layer_start and layer_end must be given together");
  }
  if (start) base.layers = LayerRange{*start, *end};
  return base;
}

RSCDConfig load_profile(const std::string& path, RSCDConfig base) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open profile " + path);
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_profile(text.str(), base);
}

}  // namespace mvh

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

#include "mvh/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mvh {

std::size_t AttentionMask::blocked_count() const {
  return static_cast<std::size_t>(
      std::count(values_.data().begin(), values_.data().end(), kNegInf));
}

AttentionMask AttentionMask::extended(std::size_t new_size) const {
  if (new_size < size()) {
    throw MaskError("AttentionMask::extended: cannot shrink");
  }
  AttentionMask out(new_size);
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = 0; j < size(); ++j) {
      if (blocked(i, j)) out.block(i, j);
    }
  }
  return out;
}

AttentionMask build_causal_mask(std::size_t size) {
  if (size == 0) {
    throw MaskError("causal mask needs T >= 1");
  }
  AttentionMask m(size);
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = i + 1; j < size; ++j) m.block(i, j);
  }
  return m;
}

AttentionMask build_t2t_mask(const RoleMap& rm) {
  AttentionMask m(rm.size());
  const auto text = rm.text_indices();
  for (std::size_t i : text) {
    for (std::size_t j : text) m.block(i, j);
  }
  return m;
}

std::size_t top_p_count(double rho, std::size_t count) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw MaskError("rho must lie in [0, 1]");
  }
  // The epsilon keeps decimal ratios such as 0.3 * 5 on the exact-half side.
  const double k = std::floor(rho * static_cast<double>(count) + 0.5 + 1e-9);
  return std::min(count, static_cast<std::size_t>(k));
}

std::vector<std::size_t> top_p_select(std::span<const double> row,
                                      std::span<const std::size_t> candidates, double rho) {
  const std::size_t k = top_p_count(rho, candidates.size());
  for (std::size_t c : candidates) {
    if (c >= row.size()) {
      throw MaskError("top_p_select: candidate " + std::to_string(c) + " out of range");
    }
  }
  std::vector<std::size_t> order(candidates.begin(), candidates.end());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return a < b;
  });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

AttentionMask build_reference_shift_mask(const AttentionMatrix& attention, const RoleMap& rm,
                                         double rho) {
  const std::size_t t = rm.size();
  if (attention.rows() != t || attention.cols() != t) {
    throw MaskError("reference shift mask: attention is " + std::to_string(attention.rows()) +
                    "x" + std::to_string(attention.cols()) + ", sequence has " +
                    std::to_string(t) + " tokens");
  }
  top_p_count(rho, 0);  // validates rho even when there is no text
  AttentionMask m(t);
  const auto text = rm.text_indices();
  std::vector<std::size_t> visible;
  for (std::size_t i : text) {
    visible.clear();
    for (std::size_t j : text) {
      if (j > i) break;
      visible.push_back(j);
    }
    for (std::size_t j : top_p_select(attention.row(i), visible, rho)) m.block(i, j);
  }
  return m;
}

AttentionMask combine_masks(std::span<const AttentionMask> masks) {
  if (masks.empty()) {
    throw MaskError("combine_masks: empty list");
  }
  const std::size_t t = masks.front().size();
  AttentionMask out(t);
  for (const auto& m : masks) {
    if (m.size() != t) {
      throw MaskError("combine_masks: size mismatch");
    }
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = 0; j < t; ++j) {
        if (m.blocked(i, j)) out.block(i, j);
      }
    }
  }
  return out;
}

AttentionMask combine_masks(const AttentionMask& a, const AttentionMask& b) {
  const AttentionMask both[] = {a, b};
  return combine_masks(both);
}

}  // namespace mvh

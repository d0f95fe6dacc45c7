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

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mvh/matrix.hpp"
#include "mvh/token_roles.hpp"

namespace mvh {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class MaskError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Additive T x T attention mask whose entries are exactly 0 or kNegInf.
class AttentionMask {
 public:
  AttentionMask() = default;
  explicit AttentionMask(std::size_t size) : values_(size, size, 0.0) {}

  std::size_t size() const { return values_.rows(); }

  void block(std::size_t i, std::size_t j) { values_(i, j) = kNegInf; }
  bool blocked(std::size_t i, std::size_t j) const { return values_(i, j) == kNegInf; }
  std::size_t blocked_count() const;

  /// The mask as an additive matrix, ready to add to attention scores.
  const Matrix& additive() const { return values_; }

  /// Copy grown to `new_size`; new cells are 0.
  AttentionMask extended(std::size_t new_size) const;

  friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

 private:
  Matrix values_;
};

/// Post-softmax attention (head-averaged), T x T.
using AttentionMatrix = Matrix;

/// Blocks (i, j) iff j > i. Throws MaskError for size 0.
AttentionMask build_causal_mask(std::size_t size);

/// Blocks (i, j) iff both i and j are text positions.
AttentionMask build_t2t_mask(const RoleMap& rm);

/// Number of candidates kept for a ratio: round-half-up(rho * count).
std::size_t top_p_count(double rho, std::size_t count);

/// The top_p_count(rho, |candidates|) candidates with the largest row values,
/// ties going to the lower index; result is ascending. Throws MaskError when
/// rho is outside [0, 1] or a candidate is out of range.
std::vector<std::size_t> top_p_select(std::span<const double> row,
                                      std::span<const std::size_t> candidates, double rho);

/// Reference shift mask: for every text row i, blocks the top-rho share of
/// the causally visible text columns {j in text : j <= i}, ranked by A(i, j).
/// Non-text rows stay open. Throws MaskError if A is not T x T for rm.
AttentionMask build_reference_shift_mask(const AttentionMatrix& attention, const RoleMap& rm,
                                         double rho);

/// Union of blocked cells. Throws MaskError on an empty list or size mismatch.
AttentionMask combine_masks(std::span<const AttentionMask> masks);
AttentionMask combine_masks(const AttentionMask& a, const AttentionMask& b);

}  // namespace mvh

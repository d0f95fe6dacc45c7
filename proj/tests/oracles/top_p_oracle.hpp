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

// Brute-force top-rho selection: enumerate every subset of the candidates
// with the required size and keep the one a full sort would pick, i.e. the
// subset with the largest sum, preferring lexicographically smaller index
// lists among equal sums.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace mvh::oracle {

inline std::vector<std::size_t> top_p_brute(const std::vector<double>& row,
                                            const std::vector<std::size_t>& candidates,
                                            double rho) {
  const std::size_t n = candidates.size();
  const std::size_t k = static_cast<std::size_t>(std::floor(rho * static_cast<double>(n) + 0.5 + 1e-9));
  std::vector<std::size_t> best;
  double best_sum = -1.0;
  bool have = false;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    std::vector<std::size_t> pick;
    double sum = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      if (mask & (1u << b)) {
        pick.push_back(candidates[b]);
        sum += row[candidates[b]];
      }
    }
    // The sort-based rule takes values in descending order, lower index
    // first on ties. Among max-sum subsets, that is the one whose multiset of
    // values is largest and whose indices are smallest for equal values.
    bool better = !have || sum > best_sum;
    if (have && sum == best_sum) better = pick < best;
    if (better) {
      best = pick;
      best_sum = sum;
      have = true;
    }
  }
  return best;
}

}  // namespace mvh::oracle

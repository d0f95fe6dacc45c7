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

// Frozen output of tests/oracles/grounding_oracle.py (num_symbols = 8).
// Regenerate with: python3 tests/oracles/grounding_oracle.py

#pragma once

#include <array>

namespace mvh::frozen {

struct GroundingCase {
  int view1_symbol;
  int view2_symbol;
  int queried_view;
};

inline constexpr int kNumSymbols = 8;

// t2t sweep, w = 2, windows start at 0, 1, 2.
inline constexpr std::array<double, 3> kUnbiasedSweep = {0.0, 0.0, 1.0};
inline constexpr std::array<double, 3> kBiasedSweep = {0.125, 0.125, 0.875};

// Biased preset: greedy wrong, RSCD (alpha 1.0, rho 0.8, beta 0.1, layers {0,1}) right.
inline constexpr std::array<GroundingCase, 14> kImprovementSet = {{
    {0, 1, 2}, {0, 2, 2}, {0, 3, 2}, {0, 4, 2}, {0, 5, 2}, {0, 6, 2}, {0, 7, 2},
    {1, 0, 1}, {2, 0, 1}, {3, 0, 1}, {4, 0, 1}, {5, 0, 1}, {6, 0, 1}, {7, 0, 1},
}};

}  // namespace mvh::frozen

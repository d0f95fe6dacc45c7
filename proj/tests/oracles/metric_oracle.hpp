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

// Direct transcription of the benchmark's metric formulas over dense
// arrays indexed [n][x][y], kept apart from the library code.
//
// Predictions are small integers: binary 1 = Yes, 0 = No, -1 = unparsed;
// MC option index, -1 = unparsed.

#pragma once

#include <array>
#include <optional>
#include <vector>

namespace mvh::oracle {

struct BinaryTruth {
  std::vector<std::array<std::array<int, 2>, 2>> answer;  // [n][x][y]
  std::vector<std::array<std::array<int, 2>, 2>> pred;
};

struct BinaryValues {
  double acc, p_acc, q_acc;
  std::optional<double> yer;
};

inline BinaryValues binary_formulas(const BinaryTruth& t) {
  const double n = static_cast<double>(t.answer.size());
  const auto ind = [&](std::size_t k, int x, int y) {
    return t.pred[k][x][y] == t.answer[k][x][y] ? 1.0 : 0.0;
  };
  double acc = 0, pacc = 0, qacc = 0, yes_wrong = 0, wrong = 0;
  for (std::size_t k = 0; k < t.answer.size(); ++k) {
    double quad = 1.0;
    for (int x = 0; x < 2; ++x) {
      double pair = 1.0;
      for (int y = 0; y < 2; ++y) {
        acc += ind(k, x, y);
        pair *= ind(k, x, y);
        quad *= ind(k, x, y);
        wrong += 1.0 - ind(k, x, y);
        yes_wrong += (t.pred[k][x][y] == 1 ? 1.0 : 0.0) * (1.0 - ind(k, x, y));
      }
      pacc += pair;
    }
    qacc += quad;
  }
  BinaryValues v{100.0 * acc / (4 * n), 100.0 * pacc / (2 * n), 100.0 * qacc / n, std::nullopt};
  if (wrong > 0) v.yer = 100.0 * yes_wrong / wrong;
  return v;
}

struct McTruth {
  std::vector<std::array<int, 2>> answer;       // [n][x] option index
  std::vector<std::array<int, 2>> adversarial;  // [n][x]
  std::vector<std::array<int, 2>> pred;
};

struct McValues {
  double acc, p_acc;
  std::optional<double> aer;
};

inline McValues mc_formulas(const McTruth& t) {
  const double n = static_cast<double>(t.answer.size());
  double acc = 0, pacc = 0, adv_wrong = 0, wrong = 0;
  for (std::size_t k = 0; k < t.answer.size(); ++k) {
    double pair = 1.0;
    for (int x = 0; x < 2; ++x) {
      const double ok = t.pred[k][x] == t.answer[k][x] ? 1.0 : 0.0;
      acc += ok;
      pair *= ok;
      wrong += 1.0 - ok;
      adv_wrong += (t.pred[k][x] == t.adversarial[k][x] ? 1.0 : 0.0) * (1.0 - ok);
    }
    pacc += pair;
  }
  McValues v{100.0 * acc / (2 * n), 100.0 * pacc / n, std::nullopt};
  if (wrong > 0) v.aer = 100.0 * adv_wrong / wrong;
  return v;
}

}  // namespace mvh::oracle

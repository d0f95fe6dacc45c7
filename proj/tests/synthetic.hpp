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

// Synthetic pair files for generator tests.

#pragma once

#include <string>
#include <vector>

#include "mvh/bench_gen.hpp"

namespace mvh::testing {

/// Two entries per view: one distinct person per view, one shared object
/// with a different descriptor in each view. Every file has cross-instance
/// and cross-view picks.
inline bench::PairFile synthetic_pair(bench::Subcategory sub, std::size_t k) {
  const std::string n = std::to_string(k);
  bench::PairFile pf;
  pf.image_pair_id = std::string(bench::to_string(sub)) + "-" + n;
  pf.subcategory = sub;
  pf.view1_pairs = {{"the person in red " + n, "waving " + n}, {"the bicycle " + n, "leaning left"}};
  pf.view2_pairs = {{"the person in blue " + n, "sitting " + n}, {"the bicycle " + n, "upright"}};
  pf.image_refs = {"img/" + n + "_1.jpg", "img/" + n + "_2.jpg"};
  return pf;
}

inline std::vector<bench::PairFile> synthetic_corpus(std::size_t per_stratum) {
  std::vector<bench::PairFile> out;
  for (auto sub : {bench::Subcategory::action, bench::Subcategory::object,
                   bench::Subcategory::numerical, bench::Subcategory::spatial}) {
    for (std::size_t k = 0; k < per_stratum; ++k) out.push_back(synthetic_pair(sub, k));
  }
  return out;
}

}  // namespace mvh::testing

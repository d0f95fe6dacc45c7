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

// MVH-Bench metrics.
//
// Binary, per group of four (x, y) questions:
//   Acc    mean correctness over all questions
//   p-Acc  mean over (group, x) of "both y answered correctly"
//   q-Acc  mean over groups of "all four answered correctly"
//   YER    wrong answers that said Yes / wrong answers
// Multiple choice, per group of two:
//   Acc, p-Acc as above
//   AER    wrong answers that chose the adversarial option / wrong answers
//
// Score = Acc + p-Acc + q-Acc + MC Acc + MC p-Acc per category;
// MVH-Score sums the two category scores. Values are percentages kept in
// full precision; rounding happens only when printing.
//
// An unparsed answer is wrong. It counts in the YER/AER denominators and
// never in their numerators.

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mvh/bench_gen.hpp"

namespace mvh::metrics {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Normalized answer: "Yes"/"No" for binary, an option letter for MC;
/// nullopt when unparsed.
using Answer = std::optional<std::string>;

/// binary: leading "yes"/"no" word, case-insensitive, after stripping
/// whitespace and punctuation. MC: leading option letter with optional ")"
/// or "." (or wrapped in parentheses), else a case-insensitive exact match
/// of an option's text.
Answer parse_answer(std::string_view raw, const bench::QARecord& record);

struct BinaryItem {
  char x;  // 'i' or 'j'
  char y;
  std::string answer;  // "Yes" or "No"
  Answer prediction;
};

struct McItem {
  std::string answer;       // option letter
  std::string adversarial;  // option letter
  Answer prediction;
};

using BinaryGroup = std::array<BinaryItem, 4>;
using McGroup = std::array<McItem, 2>;

struct BinaryMetrics {
  double acc = 0, p_acc = 0, q_acc = 0;
  std::optional<double> yer;  // absent when nothing is wrong
  std::size_t questions = 0, wrong = 0, unparsed = 0;
};

struct McMetrics {
  double acc = 0, p_acc = 0;
  std::optional<double> aer;
  std::size_t questions = 0, wrong = 0, unparsed = 0;
};

/// Throws MetricError on an empty list or a group whose (x, y) cells are not
/// exactly {i, j}^2.
BinaryMetrics binary_metrics(const std::vector<BinaryGroup>& groups);
/// Throws MetricError on an empty list.
McMetrics mc_metrics(const std::vector<McGroup>& groups);

double category_score(double acc, double p_acc, double q_acc, double mc_acc, double mc_p_acc);
double mvh_score(double ci_score, double cv_score);

/// Half-up rounding to 2 decimals, for presentation.
double round2(double v);
std::string format2(double v);

struct CategoryReport {
  BinaryMetrics binary;
  McMetrics mc;
  double score = 0;
};

struct MetricReport {
  std::map<bench::HallucinationType, CategoryReport> categories;
  std::optional<double> mvh_score;  // needs both categories
  std::size_t missing = 0;          // records without any prediction
};

/// Groups records by (group_id, qtype) and scores them. Records with no
/// entry in `predictions` count as unparsed and are tallied in `missing`.
/// Throws MetricError if a group is incomplete.
MetricReport evaluate(const std::vector<bench::QARecord>& records,
                      const std::map<std::string, Answer>& predictions);

nlohmann::ordered_json to_json(const MetricReport& report);
/// Aligned table in the column order Acc, p-Acc, q-Acc, MC-Acc, MC-p-Acc,
/// Score per category, then MVH-Score; YER and AER follow.
std::string to_table(const MetricReport& report);

}  // namespace mvh::metrics

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

// MVH-Bench QA generation from instance-descriptor pair files.
//
// A pick (p1, p2) selects (I_i, D_i) from view 1 and (I_j, D_j) from view 2.
// Each pick yields one group of six records: four binary questions over
// (x, y) in {i, j}^2, answered Yes iff x = y, and two multiple-choice
// questions (one per x) with options D_x, D_y and "Neither D_x nor D_y".
//
//   cross-instance  I_i != I_j, D_i != D_j    "Is I_x D_y?"
//   cross-view      I_i == I_j, D_i != D_j    "In view x, is I D_y?"

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace mvh::bench {

inline constexpr std::string_view kSchema = "mvhb/1";

enum class Subcategory { action, object, numerical, spatial };
enum class HallucinationType { cross_instance, cross_view };
enum class QType { binary, multiple_choice };
enum class Split { unassigned, test, validation };

std::string_view to_string(Subcategory s);
std::string_view to_string(HallucinationType t);
std::string_view to_string(QType q);
std::string_view to_string(Split s);
Subcategory parse_subcategory(std::string_view s);
HallucinationType parse_hallucination_type(std::string_view s);
QType parse_qtype(std::string_view s);
Split parse_split(std::string_view s);

class GenError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct InstanceDescriptor {
  std::string instance;
  std::string descriptor;

  friend bool operator==(const InstanceDescriptor&, const InstanceDescriptor&) = default;
};

using Pick = std::pair<std::size_t, std::size_t>;

struct PairFile {
  std::string image_pair_id;
  Subcategory subcategory = Subcategory::action;
  std::vector<InstanceDescriptor> view1_pairs;
  std::vector<InstanceDescriptor> view2_pairs;
  std::array<std::string, 2> image_refs;
  // Optional explicit picks; without them the generator enumerates valid
  // picks in (p1, p2) order.
  std::optional<std::vector<Pick>> cross_instance_picks;
  std::optional<std::vector<Pick>> cross_view_picks;
};

/// Validates and converts one pair-file document. Throws GenError naming the
/// offending field.
PairFile parse_pair_file(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const PairFile& pf);

/// Warnings for things a human verifier would catch: duplicate descriptors
/// within a view, surrounding or doubled whitespace.
std::vector<std::string> lint_pair_file(const PairFile& pf);

struct QARecord {
  std::string id;
  std::string group_id;
  HallucinationType hallucination_type = HallucinationType::cross_instance;
  QType qtype = QType::binary;
  std::string question;
  std::vector<std::string> options;  // multiple choice only
  std::string answer_key;            // "Yes"/"No", or an option letter
  std::string adversarial_option;    // option letter holding D_y; MC only
  std::array<char, 2> roles{'i', 'i'};  // (x, y)
  Subcategory subcategory = Subcategory::action;
  Split split = Split::unassigned;
  std::array<std::string, 2> image_refs;
  std::string image_pair_id;
  std::vector<int> permutation;  // MC: options[k] was originally option permutation[k]

  friend bool operator==(const QARecord&, const QARecord&) = default;
};

nlohmann::ordered_json to_json(const QARecord& r);
/// Throws GenError on a wrong schema tag or a malformed field.
QARecord record_from_json(const nlohmann::json& doc);

/// "A", "B", "C", ... for 0, 1, 2, ...
std::string option_letter(std::size_t index);
/// Inverse of option_letter; nullopt for anything else.
std::optional<std::size_t> option_index(std::string_view letter);

std::string binary_question(Subcategory sub, HallucinationType type, const std::string& instance,
                            const std::string& descriptor, int view);
std::string mc_question(Subcategory sub, HallucinationType type, const std::string& instance,
                        int view);

/// Four binary records then two MC records, options unshuffled. `index`
/// numbers the group within its (pair, type). Throws GenError naming the
/// failed precondition.
std::vector<QARecord> gen_cross_instance(const PairFile& pf, std::size_t pick1, std::size_t pick2,
                                         std::size_t index = 0);
std::vector<QARecord> gen_cross_view(const PairFile& pf, std::size_t pick1, std::size_t pick2,
                                     std::size_t index = 0);

/// Every pick satisfying the type's precondition, in (p1, p2) order.
std::vector<Pick> valid_picks(const PairFile& pf, HallucinationType type);

/// Seeded Fisher-Yates over the options; the stream depends only on
/// (seed, record id). Throws GenError for a binary record.
QARecord shuffle_options(const QARecord& qa, std::uint64_t seed);

/// Assigns test/validation per group. Within each (type, subcategory)
/// stratum, round-half-up(ratio * groups) groups go to test. Throws GenError
/// on empty input or ratio outside (0, 1).
std::vector<QARecord> split_dataset(std::vector<QARecord> records, double ratio,
                                    std::uint64_t seed);

/// FNV-1a 64 of a string.
std::uint64_t fnv1a(std::string_view s);
/// Mixes a seed with a key into an independent stream seed.
std::uint64_t stream_seed(std::uint64_t seed, std::string_view key);

struct GenOptions {
  std::uint64_t seed = 0;
  std::size_t max_per_pair = 1;
  double split_ratio = 0.9;
};

struct StratumCount {
  std::size_t groups = 0;
  std::size_t binary = 0;
  std::size_t multiple_choice = 0;
  std::size_t test_groups = 0;
  std::size_t validation_groups = 0;
};

struct GenSummary {
  std::map<std::string, StratumCount> strata;  // "type/subcategory"
  std::map<std::string, StratumCount> types;   // "type"
  std::size_t skipped = 0;  // (pair, type) combinations with no valid pick
};

struct GenResult {
  std::vector<QARecord> records;
  GenSummary summary;
};

/// Generation, shuffling and splitting for a list of pair files. Output
/// order follows input order: per pair, cross-instance groups then
/// cross-view groups.
GenResult generate(const std::vector<PairFile>& pairs, const GenOptions& options);

GenSummary summarize(const std::vector<QARecord>& records);

/// One JSON line per record.
std::string to_jsonl(const std::vector<QARecord>& records);
/// Throws GenError with the 1-based line number.
std::vector<QARecord> parse_jsonl(std::string_view text);

/// A manifest lists one pair file per line: a path (relative paths resolve
/// against the manifest's directory) or an inline JSON object. Blank lines
/// and lines starting with '#' are skipped.
struct ManifestError : GenError {
  ManifestError(std::size_t line, const std::string& what);
  std::size_t line;
};

std::vector<PairFile> read_manifest(const std::string& path);

}  // namespace mvh::bench

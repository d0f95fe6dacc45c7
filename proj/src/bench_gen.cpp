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

#include "mvh/bench_gen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace mvh::bench {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Subcategory s) {
  switch (s) {
    case Subcategory::action: return "action";
    case Subcategory::object: return "object";
    case Subcategory::numerical: return "numerical";
    case Subcategory::spatial: return "spatial";
  }
  return "?";
}

std::string_view to_string(HallucinationType t) {
  return t == HallucinationType::cross_instance ? "cross_instance" : "cross_view";
}

std::string_view to_string(QType q) {
  return q == QType::binary ? "binary" : "multiple_choice";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::unassigned: return "unassigned";
    case Split::test: return "test";
    case Split::validation: return "validation";
  }
  return "?";
}

Subcategory parse_subcategory(std::string_view s) {
  for (auto c : {Subcategory::action, Subcategory::object, Subcategory::numerical,
                 Subcategory::spatial}) {
    if (s == to_string(c)) return c;
  }
  throw GenError("unknown subcategory '" + std::string(s) + "'");
}

HallucinationType parse_hallucination_type(std::string_view s) {
  if (s == "cross_instance") return HallucinationType::cross_instance;
  if (s == "cross_view") return HallucinationType::cross_view;
  throw GenError("unknown hallucination_type '" + std::string(s) + "'");
}

QType parse_qtype(std::string_view s) {
  if (s == "binary") return QType::binary;
  if (s == "multiple_choice") return QType::multiple_choice;
  throw GenError("unknown qtype '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  for (auto c : {Split::unassigned, Split::test, Split::validation}) {
    if (s == to_string(c)) return c;
  }
  throw GenError("unknown split '" + std::string(s) + "'");
}

namespace {

const json& require(const json& doc, const char* field) {
  if (!doc.is_object() || !doc.contains(field)) {
    throw GenError(std::string("missing field '") + field + "'");
  }
  return doc.at(field);
}

std::string require_string(const json& doc, const char* field) {
  const json& v = require(doc, field);
  if (!v.is_string() || v.get<std::string>().empty()) {
    throw GenError(std::string("field '") + field + "' must be a non-empty string");
  }
  return v.get<std::string>();
}

std::vector<InstanceDescriptor> parse_view(const json& doc, const char* field) {
  const json& v = require(doc, field);
  if (!v.is_array() || v.empty()) {
    throw GenError(std::string("field '") + field + "' must be a non-empty array");
  }
  std::vector<InstanceDescriptor> out;
  std::set<std::string> seen;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const json& e = v[k];
    const std::string where = std::string(field) + "[" + std::to_string(k) + "]";
    InstanceDescriptor p;
    if (e.is_array() && e.size() == 2 && e[0].is_string() && e[1].is_string()) {
      p = {e[0].get<std::string>(), e[1].get<std::string>()};
    } else if (e.is_object() && e.contains("instance") && e.contains("descriptor") &&
               e["instance"].is_string() && e["descriptor"].is_string()) {
      p = {e["instance"].get<std::string>(), e["descriptor"].get<std::string>()};
    } else {
      throw GenError(where + " must be [instance, descriptor] or {instance, descriptor}");
    }
    if (p.instance.empty() || p.descriptor.empty()) {
      throw GenError(where + " has an empty string");
    }
    if (!seen.insert(p.instance).second) {
      throw GenError(where + " repeats instance '" + p.instance + "'");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Pick> parse_picks(const json& v, const std::string& where) {
  if (!v.is_array()) throw GenError(where + " must be an array of [p1, p2]");
  std::vector<Pick> out;
  for (const json& e : v) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() ||
        !e[1].is_number_unsigned()) {
      throw GenError(where + " entries must be [p1, p2] with non-negative integers");
    }
    out.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
  }
  return out;
}

}  // namespace

PairFile parse_pair_file(const json& doc) {
  if (!doc.is_object()) throw GenError("pair file must be a JSON object");
  PairFile pf;
  pf.image_pair_id = require_string(doc, "image_pair_id");
  pf.subcategory = parse_subcategory(require_string(doc, "subcategory"));
  pf.view1_pairs = parse_view(doc, "view1_pairs");
  pf.view2_pairs = parse_view(doc, "view2_pairs");
  const json& refs = require(doc, "image_refs");
  if (!refs.is_array() || refs.size() != 2 || !refs[0].is_string() || !refs[1].is_string() ||
      refs[0].get<std::string>().empty() || refs[1].get<std::string>().empty()) {
    throw GenError("field 'image_refs' must hold two non-empty strings");
  }
  pf.image_refs = {refs[0].get<std::string>(), refs[1].get<std::string>()};
  if (doc.contains("picks")) {
    const json& picks = doc["picks"];
    if (!picks.is_object()) throw GenError("field 'picks' must be an object");
    for (const auto& [key, value] : picks.items()) {
      if (key == "cross_instance") {
        pf.cross_instance_picks = parse_picks(value, "picks.cross_instance");
      } else if (key == "cross_view") {
        pf.cross_view_picks = parse_picks(value, "picks.cross_view");
      } else {
        throw GenError("unknown key 'picks." + key + "'");
      }
    }
  }
  return pf;
}

ordered_json to_json(const PairFile& pf) {
  ordered_json doc;
  doc["image_pair_id"] = pf.image_pair_id;
  doc["subcategory"] = to_string(pf.subcategory);
  for (const auto* view : {&pf.view1_pairs, &pf.view2_pairs}) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : *view) arr.push_back({p.instance, p.descriptor});
    doc[view == &pf.view1_pairs ? "view1_pairs" : "view2_pairs"] = arr;
  }
  doc["image_refs"] = {pf.image_refs[0], pf.image_refs[1]};
  if (pf.cross_instance_picks || pf.cross_view_picks) {
    ordered_json picks = ordered_json::object();
    if (pf.cross_instance_picks) picks["cross_instance"] = *pf.cross_instance_picks;
    if (pf.cross_view_picks) picks["cross_view"] = *pf.cross_view_picks;
    doc["picks"] = picks;
  }
  return doc;
}

std::vector<std::string> lint_pair_file(const PairFile& pf) {
  std::vector<std::string> out;
  const auto check_space = [&](const std::string& s, const std::string& where) {
    if (!s.empty() && (std::isspace(static_cast<unsigned char>(s.front())) ||
                       std::isspace(static_cast<unsigned char>(s.back())))) {
      out.push_back(where + ": leading or trailing whitespace in '" + s + "'");
    }
    if (s.find("  ") != std::string::npos) {
      out.push_back(where + ": doubled space in '" + s + "'");
    }
  };
  for (int v = 1; v <= 2; ++v) {
    const auto& view = v == 1 ? pf.view1_pairs : pf.view2_pairs;
    const std::string name = pf.image_pair_id + " view" + std::to_string(v);
    std::set<std::string> descriptors;
    for (std::size_t k = 0; k < view.size(); ++k) {
      const std::string where = name + "[" + std::to_string(k) + "]";
      check_space(view[k].instance, where);
      check_space(view[k].descriptor, where);
      if (!descriptors.insert(view[k].descriptor).second) {
        out.push_back(where + ": duplicate descriptor '" + view[k].descriptor + "'");
      }
    }
  }
  return out;
}

std::string option_letter(std::size_t index) {
  return std::string(1, static_cast<char>('A' + index));
}

std::optional<std::size_t> option_index(std::string_view letter) {
  if (letter.size() != 1 || letter[0] < 'A' || letter[0] > 'Z') return std::nullopt;
  return static_cast<std::size_t>(letter[0] - 'A');
}

ordered_json to_json(const QARecord& r) {
  ordered_json doc;
  doc["schema"] = kSchema;
  doc["id"] = r.id;
  doc["group_id"] = r.group_id;
  doc["image_pair_id"] = r.image_pair_id;
  doc["hallucination_type"] = to_string(r.hallucination_type);
  doc["subcategory"] = to_string(r.subcategory);
  doc["qtype"] = to_string(r.qtype);
  doc["question"] = r.question;
  if (r.qtype == QType::multiple_choice) doc["options"] = r.options;
  doc["answer_key"] = r.answer_key;
  if (r.qtype == QType::multiple_choice) doc["adversarial_option"] = r.adversarial_option;
  doc["roles"] = {std::string(1, r.roles[0]), std::string(1, r.roles[1])};
  doc["split"] = to_string(r.split);
  doc["image_refs"] = {r.image_refs[0], r.image_refs[1]};
  if (r.qtype == QType::multiple_choice) doc["permutation"] = r.permutation;
  return doc;
}

QARecord record_from_json(const json& doc) {
  if (!doc.is_object()) throw GenError("record must be a JSON object");
  const std::string schema = require_string(doc, "schema");
  if (schema != kSchema) {
    throw GenError("unsupported schema '" + schema + "', expected " + std::string(kSchema));
  }
  QARecord r;
  r.id = require_string(doc, "id");
  r.group_id = require_string(doc, "group_id");
  r.image_pair_id = require_string(doc, "image_pair_id");
  r.hallucination_type = parse_hallucination_type(require_string(doc, "hallucination_type"));
  r.subcategory = parse_subcategory(require_string(doc, "subcategory"));
  r.qtype = parse_qtype(require_string(doc, "qtype"));
  r.question = require_string(doc, "question");
  r.answer_key = require_string(doc, "answer_key");
  r.split = parse_split(require_string(doc, "split"));
  const json& roles = require(doc, "roles");
  if (!roles.is_array() || roles.size() != 2) throw GenError("field 'roles' must be [x, y]");
  for (int k = 0; k < 2; ++k) {
    const std::string s = roles[k].is_string() ? roles[k].get<std::string>() : "";
    if (s != "i" && s != "j") throw GenError("field 'roles' entries must be \"i\" or \"j\"");
    r.roles[k] = s[0];
  }
  const json& refs = require(doc, "image_refs");
  if (!refs.is_array() || refs.size() != 2 || !refs[0].is_string() || !refs[1].is_string()) {
    throw GenError("field 'image_refs' must hold two strings");
  }
  r.image_refs = {refs[0].get<std::string>(), refs[1].get<std::string>()};
  if (r.qtype == QType::binary) {
    if (r.answer_key != "Yes" && r.answer_key != "No") {
      throw GenError("binary answer_key must be Yes or No");
    }
    return r;
  }
  const json& options = require(doc, "options");
  if (!options.is_array() || options.size() < 2) {
    throw GenError("field 'options' must list at least two options");
  }
  for (const json& o : options) {
    if (!o.is_string()) throw GenError("field 'options' must hold strings");
    r.options.push_back(o.get<std::string>());
  }
  const auto key = option_index(r.answer_key);
  if (!key || *key >= r.options.size()) {
    throw GenError("answer_key '" + r.answer_key + "' does not name an option");
  }
  r.adversarial_option = require_string(doc, "adversarial_option");
  const auto adv = option_index(r.adversarial_option);
  if (!adv || *adv >= r.options.size()) {
    throw GenError("adversarial_option '" + r.adversarial_option + "' does not name an option");
  }
  if (doc.contains("permutation")) {
    r.permutation = doc["permutation"].get<std::vector<int>>();
  }
  return r;
}

namespace {

bool plural(const std::string& instance) {
  const std::size_t n = instance.size();
  return n >= 2 && instance[n - 1] == 's' &&
         std::isalpha(static_cast<unsigned char>(instance[n - 2]));
}

// Present-tense "to be" agreeing with the instance: Am / Are / Is.
std::string be(const std::string& instance) {
  if (instance == "I") return "Am";
  return plural(instance) ? "Are" : "Is";
}

std::string lower_first(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

std::string with_view(HallucinationType type, int view, std::string question) {
  if (type == HallucinationType::cross_instance) return question;
  return "In view " + std::to_string(view) + ", " + lower_first(std::move(question));
}

}  // namespace

std::string binary_question(Subcategory sub, HallucinationType type, const std::string& instance,
                            const std::string& descriptor, int view) {
  std::string q;
  if (sub == Subcategory::numerical) {
    const bool one = descriptor == "1" || descriptor == "one";
    q = std::string(one ? "Is there " : "Are there ") + descriptor + " " + instance + "?";
  } else {
    q = be(instance) + " " + instance + " " + descriptor + "?";
  }
  return with_view(type, view, std::move(q));
}

std::string mc_question(Subcategory sub, HallucinationType type, const std::string& instance,
                        int view) {
  std::string q;
  switch (sub) {
    case Subcategory::action:
      q = "What " + lower_first(be(instance)) + " " + instance + " doing?";
      break;
    case Subcategory::object:
      q = "What " + lower_first(be(instance)) + " " + instance + "?";
      break;
    case Subcategory::numerical:
      q = "How many " + instance + " are there?";
      break;
    case Subcategory::spatial:
      q = "Where " + lower_first(be(instance)) + " " + instance + "?";
      break;
  }
  return with_view(type, view, std::move(q));
}

namespace {

std::vector<QARecord> build_group(const PairFile& pf, HallucinationType type,
                                  const InstanceDescriptor& pi, const InstanceDescriptor& pj,
                                  std::size_t index) {
  const std::string tag = type == HallucinationType::cross_instance ? "ci" : "cv";
  const std::string group = pf.image_pair_id + "/" + tag + "/" + std::to_string(index);
  const auto pick = [&](char r) -> const InstanceDescriptor& { return r == 'i' ? pi : pj; };
  const auto view_of = [](char r) { return r == 'i' ? 1 : 2; };

  QARecord proto;
  proto.group_id = group;
  proto.hallucination_type = type;
  proto.subcategory = pf.subcategory;
  proto.image_refs = pf.image_refs;
  proto.image_pair_id = pf.image_pair_id;

  std::vector<QARecord> out;
  for (char x : {'i', 'j'}) {
    for (char y : {'i', 'j'}) {
      QARecord r = proto;
      r.id = group + "/b" + x + y;
      r.qtype = QType::binary;
      r.roles = {x, y};
      r.question = binary_question(pf.subcategory, type, pick(x).instance, pick(y).descriptor,
                                   view_of(x));
      r.answer_key = x == y ? "Yes" : "No";
      out.push_back(std::move(r));
    }
  }
  for (char x : {'i', 'j'}) {
    const char y = x == 'i' ? 'j' : 'i';
    QARecord r = proto;
    r.id = group + "/m" + x;
    r.qtype = QType::multiple_choice;
    r.roles = {x, y};
    r.question = mc_question(pf.subcategory, type, pick(x).instance, view_of(x));
    r.options = {pick(x).descriptor, pick(y).descriptor,
                 "Neither " + pick(x).descriptor + " nor " + pick(y).descriptor};
    r.answer_key = "A";
    r.adversarial_option = "B";
    r.permutation = {0, 1, 2};
    out.push_back(std::move(r));
  }
  return out;
}

void check_picks(const PairFile& pf, std::size_t pick1, std::size_t pick2) {
  if (pick1 >= pf.view1_pairs.size()) {
    throw GenError(pf.image_pair_id + ": pick1 " + std::to_string(pick1) +
                   " is out of range for view1_pairs");
  }
  if (pick2 >= pf.view2_pairs.size()) {
    throw GenError(pf.image_pair_id + ": pick2 " + std::to_string(pick2) +
                   " is out of range for view2_pairs");
  }
}

}  // namespace

std::vector<QARecord> gen_cross_instance(const PairFile& pf, std::size_t pick1, std::size_t pick2,
                                         std::size_t index) {
  check_picks(pf, pick1, pick2);
  const auto& pi = pf.view1_pairs[pick1];
  const auto& pj = pf.view2_pairs[pick2];
  if (pi.instance == pj.instance) {
    throw GenError(pf.image_pair_id + ": cross-instance needs I_i != I_j, both are '" +
                   pi.instance + "'");
  }
  if (pi.descriptor == pj.descriptor) {
    throw GenError(pf.image_pair_id + ": cross-instance needs D_i != D_j, both are '" +
                   pi.descriptor + "'");
  }
  return build_group(pf, HallucinationType::cross_instance, pi, pj, index);
}

std::vector<QARecord> gen_cross_view(const PairFile& pf, std::size_t pick1, std::size_t pick2,
                                     std::size_t index) {
  check_picks(pf, pick1, pick2);
  const auto& pi = pf.view1_pairs[pick1];
  const auto& pj = pf.view2_pairs[pick2];
  if (pi.instance != pj.instance) {
    throw GenError(pf.image_pair_id + ": cross-view needs I_i == I_j, got '" + pi.instance +
                   "' and '" + pj.instance + "'");
  }
  if (pi.descriptor == pj.descriptor) {
    throw GenError(pf.image_pair_id + ": cross-view needs D_i != D_j, both are '" +
                   pi.descriptor + "'");
  }
  return build_group(pf, HallucinationType::cross_view, pi, pj, index);
}

std::vector<Pick> valid_picks(const PairFile& pf, HallucinationType type) {
  std::vector<Pick> out;
  for (std::size_t a = 0; a < pf.view1_pairs.size(); ++a) {
    for (std::size_t b = 0; b < pf.view2_pairs.size(); ++b) {
      const auto& pi = pf.view1_pairs[a];
      const auto& pj = pf.view2_pairs[b];
      const bool same = pi.instance == pj.instance;
      const bool want_same = type == HallucinationType::cross_view;
      if (same == want_same && pi.descriptor != pj.descriptor) out.emplace_back(a, b);
    }
  }
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t stream_seed(std::uint64_t seed, std::string_view key) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed ^ (fnv1a(key) + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace {

// Uniform integer in [0, n) without std distributions, whose output is
// implementation-defined.
std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[below(rng, i)]);
  }
}

}  // namespace

QARecord shuffle_options(const QARecord& qa, std::uint64_t seed) {
  if (qa.qtype != QType::multiple_choice) {
    throw GenError("shuffle_options: record " + qa.id + " is not multiple choice");
  }
  const auto key = option_index(qa.answer_key);
  const auto adv = option_index(qa.adversarial_option);
  if (!key || *key >= qa.options.size() || !adv || *adv >= qa.options.size()) {
    throw GenError("shuffle_options: record " + qa.id + " has dangling option letters");
  }
  std::vector<int> order(qa.options.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
  seeded_shuffle(order, stream_seed(seed, qa.id));

  QARecord out = qa;
  std::vector<int> base = qa.permutation;
  if (base.size() != qa.options.size()) {
    base = order;
    for (std::size_t k = 0; k < base.size(); ++k) base[k] = static_cast<int>(k);
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto from = static_cast<std::size_t>(order[k]);
    out.options[k] = qa.options[from];
    out.permutation[k] = base[from];
    if (from == *key) out.answer_key = option_letter(k);
    if (from == *adv) out.adversarial_option = option_letter(k);
  }
  return out;
}

namespace {

std::size_t round_half_up(double v) {
  return static_cast<std::size_t>(std::floor(v + 0.5 + 1e-9));
}

std::string stratum_key(const QARecord& r) {
  return std::string(to_string(r.hallucination_type)) + "/" + std::string(to_string(r.subcategory));
}

}  // namespace

std::vector<QARecord> split_dataset(std::vector<QARecord> records, double ratio,
                                    std::uint64_t seed) {
  if (records.empty()) throw GenError("split_dataset: no records");
  if (!(ratio > 0.0 && ratio < 1.0)) throw GenError("split_dataset: ratio must lie in (0, 1)");

  std::map<std::string, std::set<std::string>> strata;
  std::map<std::string, std::string> group_stratum;
  for (const auto& r : records) {
    const std::string key = stratum_key(r);
    const auto [it, inserted] = group_stratum.emplace(r.group_id, key);
    if (!inserted && it->second != key) {
      throw GenError("split_dataset: group " + r.group_id + " spans two strata");
    }
    strata[key].insert(r.group_id);
  }
  std::map<std::string, Split> assignment;
  for (const auto& [key, groups] : strata) {
    std::vector<std::string> order(groups.begin(), groups.end());
    seeded_shuffle(order, stream_seed(seed, "split/" + key));
    const std::size_t n_test = std::min(order.size(), round_half_up(ratio * order.size()));
    for (std::size_t k = 0; k < order.size(); ++k) {
      assignment[order[k]] = k < n_test ? Split::test : Split::validation;
    }
  }
  for (auto& r : records) r.split = assignment.at(r.group_id);
  return records;
}

GenSummary summarize(const std::vector<QARecord>& records) {
  GenSummary s;
  std::set<std::string> seen;
  for (const auto& r : records) {
    const std::string type(to_string(r.hallucination_type));
    for (auto* c : {&s.strata[stratum_key(r)], &s.types[type]}) {
      (r.qtype == QType::binary ? c->binary : c->multiple_choice) += 1;
    }
    if (seen.insert(r.group_id).second) {
      for (auto* c : {&s.strata[stratum_key(r)], &s.types[type]}) {
        c->groups += 1;
        if (r.split == Split::test) c->test_groups += 1;
        if (r.split == Split::validation) c->validation_groups += 1;
      }
    }
  }
  return s;
}

GenResult generate(const std::vector<PairFile>& pairs, const GenOptions& options) {
  if (options.max_per_pair == 0) throw GenError("max_per_pair must be >= 1");
  std::vector<std::vector<QARecord>> per_pair(pairs.size());
  std::vector<std::size_t> skipped(pairs.size(), 0);
  std::vector<std::string> errors(pairs.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(pairs.size()); ++p) {
    const PairFile& pf = pairs[static_cast<std::size_t>(p)];
    auto& out = per_pair[static_cast<std::size_t>(p)];
    try {
      for (auto type : {HallucinationType::cross_instance, HallucinationType::cross_view}) {
        const auto& explicit_picks = type == HallucinationType::cross_instance
                                         ? pf.cross_instance_picks
                                         : pf.cross_view_picks;
        const std::vector<Pick> picks = explicit_picks ? *explicit_picks : valid_picks(pf, type);
        if (picks.empty()) {
          skipped[static_cast<std::size_t>(p)] += 1;
          continue;
        }
        const std::size_t n = std::min(picks.size(), options.max_per_pair);
        for (std::size_t k = 0; k < n; ++k) {
          auto group = type == HallucinationType::cross_instance
                           ? gen_cross_instance(pf, picks[k].first, picks[k].second, k)
                           : gen_cross_view(pf, picks[k].first, picks[k].second, k);
          for (auto& r : group) {
            if (r.qtype == QType::multiple_choice) r = shuffle_options(r, options.seed);
            out.push_back(std::move(r));
          }
        }
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(p)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw GenError(e);
  }

  GenResult result;
  std::set<std::string> ids;
  for (auto& group : per_pair) {
    for (auto& r : group) {
      if (!ids.insert(r.id).second) throw GenError("duplicate record id " + r.id);
      result.records.push_back(std::move(r));
    }
  }
  if (result.records.empty()) throw GenError("no valid picks in any pair file");
  result.records = split_dataset(std::move(result.records), options.split_ratio, options.seed);
  result.summary = summarize(result.records);
  for (std::size_t s : skipped) result.summary.skipped += s;
  return result;
}

std::string to_jsonl(const std::vector<QARecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<QARecord> parse_jsonl(std::string_view text) {
  std::vector<QARecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw GenError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

ManifestError::ManifestError(std::size_t line_no, const std::string& what)
    : GenError("manifest line " + std::to_string(line_no) + ": " + what), line(line_no) {}

std::vector<PairFile> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read manifest " + path);
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  std::vector<PairFile> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto b = raw.find_first_not_of(" \t\r");
    if (b == std::string::npos || raw[b] == '#') continue;
    const auto e = raw.find_last_not_of(" \t\r");
    const std::string line = raw.substr(b, e - b + 1);
    try {
      json doc;
      if (line.front() == '{') {
        doc = json::parse(line);
      } else {
        std::filesystem::path p(line);
        if (p.is_relative()) p = dir / p;
        std::ifstream f(p);
        if (!f) throw GenError("cannot read pair file " + p.string());
        doc = json::parse(f);
      }
      out.push_back(parse_pair_file(doc));
    } catch (const json::exception& ex) {
      throw ManifestError(line_no, std::string("invalid JSON: ") + ex.what());
    } catch (const GenError& ex) {
      throw ManifestError(line_no, ex.what());
    }
  }
  return out;
}

}  // namespace mvh::bench

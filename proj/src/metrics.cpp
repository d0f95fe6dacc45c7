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

#include "mvh/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace mvh::metrics {

using bench::QARecord;
using bench::QType;

namespace {

bool is_space_or_punct(unsigned char c) { return std::isspace(c) || std::ispunct(c); }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Answer parse_answer(std::string_view raw, const QARecord& record) {
  if (record.qtype == QType::binary) {
    std::size_t b = 0;
    while (b < raw.size() && is_space_or_punct(static_cast<unsigned char>(raw[b]))) ++b;
    std::size_t e = b;
    while (e < raw.size() && std::isalpha(static_cast<unsigned char>(raw[e]))) ++e;
    const std::string word = lower(raw.substr(b, e - b));
    if (word == "yes") return "Yes";
    if (word == "no") return "No";
    return std::nullopt;
  }

  const std::string_view s = trim(raw);
  const std::size_t n = record.options.size();
  std::size_t at = 0;
  const bool paren = !s.empty() && s[0] == '(';
  if (paren) at = 1;
  if (at < s.size()) {
    const char c = s[at];
    if (c >= 'A' && static_cast<std::size_t>(c - 'A') < n) {
      const std::size_t next = at + 1;
      const bool closed = next == s.size() ||
                          (paren ? s[next] == ')'
                                 : (s[next] == ')' || s[next] == '.' || s[next] == ':' ||
                                    s[next] == ',' || std::isspace(static_cast<unsigned char>(s[next]))));
      if (closed) return bench::option_letter(static_cast<std::size_t>(c - 'A'));
    }
  }
  std::string_view body = s;
  while (!body.empty() && body.back() == '.') body.remove_suffix(1);
  const std::string needle = lower(trim(body));
  for (std::size_t k = 0; k < n; ++k) {
    if (lower(record.options[k]) == needle) return bench::option_letter(k);
  }
  return std::nullopt;
}

BinaryMetrics binary_metrics(const std::vector<BinaryGroup>& groups) {
  if (groups.empty()) throw MetricError("binary_metrics: no groups");
  BinaryMetrics m;
  std::size_t correct = 0, pairs_correct = 0, quads_correct = 0, yes_wrong = 0;
  for (const auto& g : groups) {
    std::array<bool, 4> seen{};
    bool all = true;
    std::array<bool, 2> pair_ok{true, true};
    for (const auto& item : g) {
      if ((item.x != 'i' && item.x != 'j') || (item.y != 'i' && item.y != 'j')) {
        throw MetricError("binary_metrics: roles must be i or j");
      }
      const int cell = (item.x == 'j' ? 2 : 0) + (item.y == 'j' ? 1 : 0);
      if (seen[cell]) throw MetricError("binary_metrics: repeated (x, y) cell in a group");
      seen[cell] = true;

      const bool ok = item.prediction && *item.prediction == item.answer;
      ++m.questions;
      if (!item.prediction) ++m.unparsed;
      if (ok) {
        ++correct;
      } else {
        ++m.wrong;
        if (item.prediction && *item.prediction == "Yes") ++yes_wrong;
        all = false;
        pair_ok[item.x == 'j' ? 1 : 0] = false;
      }
    }
    pairs_correct += (pair_ok[0] ? 1 : 0) + (pair_ok[1] ? 1 : 0);
    quads_correct += all ? 1 : 0;
  }
  const double n = static_cast<double>(groups.size());
  m.acc = 100.0 * static_cast<double>(correct) / (4.0 * n);
  m.p_acc = 100.0 * static_cast<double>(pairs_correct) / (2.0 * n);
  m.q_acc = 100.0 * static_cast<double>(quads_correct) / n;
  if (m.wrong > 0) m.yer = 100.0 * static_cast<double>(yes_wrong) / static_cast<double>(m.wrong);
  return m;
}

McMetrics mc_metrics(const std::vector<McGroup>& groups) {
  if (groups.empty()) throw MetricError("mc_metrics: no groups");
  McMetrics m;
  std::size_t correct = 0, pairs_correct = 0, adversarial_wrong = 0;
  for (const auto& g : groups) {
    bool both = true;
    for (const auto& item : g) {
      const bool ok = item.prediction && *item.prediction == item.answer;
      ++m.questions;
      if (!item.prediction) ++m.unparsed;
      if (ok) {
        ++correct;
      } else {
        ++m.wrong;
        if (item.prediction && *item.prediction == item.adversarial) ++adversarial_wrong;
        both = false;
      }
    }
    pairs_correct += both ? 1 : 0;
  }
  const double n = static_cast<double>(groups.size());
  m.acc = 100.0 * static_cast<double>(correct) / (2.0 * n);
  m.p_acc = 100.0 * static_cast<double>(pairs_correct) / n;
  if (m.wrong > 0) {
    m.aer = 100.0 * static_cast<double>(adversarial_wrong) / static_cast<double>(m.wrong);
  }
  return m;
}

double category_score(double acc, double p_acc, double q_acc, double mc_acc, double mc_p_acc) {
  return acc + p_acc + q_acc + mc_acc + mc_p_acc;
}

double mvh_score(double ci_score, double cv_score) { return ci_score + cv_score; }

double round2(double v) {
  return std::floor(v * 100.0 + 0.5 + 1e-9) / 100.0;
}

std::string format2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", round2(v));
  return buf;
}

MetricReport evaluate(const std::vector<QARecord>& records,
                      const std::map<std::string, Answer>& predictions) {
  struct Groups {
    std::map<std::string, std::vector<BinaryItem>> binary;
    std::map<std::string, std::vector<McItem>> mc;
  };
  std::map<bench::HallucinationType, Groups> by_type;
  MetricReport report;
  for (const auto& r : records) {
    Answer pred;
    const auto it = predictions.find(r.id);
    if (it == predictions.end()) {
      ++report.missing;
    } else {
      pred = it->second;
    }
    auto& g = by_type[r.hallucination_type];
    if (r.qtype == QType::binary) {
      g.binary[r.group_id].push_back({r.roles[0], r.roles[1], r.answer_key, pred});
    } else {
      g.mc[r.group_id].push_back({r.answer_key, r.adversarial_option, pred});
    }
  }
  for (auto& [type, g] : by_type) {
    std::vector<BinaryGroup> bin;
    for (auto& [id, items] : g.binary) {
      if (items.size() != 4) {
        throw MetricError("group " + id + " has " + std::to_string(items.size()) +
                          " binary questions, expected 4");
      }
      bin.push_back({items[0], items[1], items[2], items[3]});
    }
    std::vector<McGroup> mc;
    for (auto& [id, items] : g.mc) {
      if (items.size() != 2) {
        throw MetricError("group " + id + " has " + std::to_string(items.size()) +
                          " multiple-choice questions, expected 2");
      }
      mc.push_back({items[0], items[1]});
    }
    if (bin.empty() || mc.empty()) {
      throw MetricError(std::string("category ") + std::string(bench::to_string(type)) +
                        " needs both binary and multiple-choice groups");
    }
    CategoryReport c;
    c.binary = binary_metrics(bin);
    c.mc = mc_metrics(mc);
    c.score = category_score(c.binary.acc, c.binary.p_acc, c.binary.q_acc, c.mc.acc, c.mc.p_acc);
    report.categories[type] = c;
  }
  const auto ci = report.categories.find(bench::HallucinationType::cross_instance);
  const auto cv = report.categories.find(bench::HallucinationType::cross_view);
  if (ci != report.categories.end() && cv != report.categories.end()) {
    report.mvh_score = mvh_score(ci->second.score, cv->second.score);
  }
  return report;
}

namespace {

nlohmann::ordered_json rate(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(round2(*v)) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json to_json(const MetricReport& report) {
  nlohmann::ordered_json doc;
  doc["aggregation"] = "pooled";
  for (const auto& [type, c] : report.categories) {
    nlohmann::ordered_json cat;
    cat["binary"] = {{"acc", round2(c.binary.acc)},
                     {"p_acc", round2(c.binary.p_acc)},
                     {"q_acc", round2(c.binary.q_acc)},
                     {"yer", rate(c.binary.yer)},
                     {"questions", c.binary.questions},
                     {"wrong", c.binary.wrong},
                     {"unparsed", c.binary.unparsed}};
    cat["mc"] = {{"acc", round2(c.mc.acc)},
                 {"p_acc", round2(c.mc.p_acc)},
                 {"aer", rate(c.mc.aer)},
                 {"questions", c.mc.questions},
                 {"wrong", c.mc.wrong},
                 {"unparsed", c.mc.unparsed}};
    cat["score"] = round2(c.score);
    doc[std::string(bench::to_string(type))] = cat;
  }
  doc["mvh_score"] = rate(report.mvh_score);
  doc["missing_predictions"] = report.missing;
  return doc;
}

std::string to_table(const MetricReport& report) {
  const std::vector<std::string> head = {"Category", "Acc",   "p-Acc", "q-Acc", "MC-Acc",
                                         "MC-p-Acc", "Score", "YER",   "AER"};
  std::vector<std::vector<std::string>> rows;
  const auto opt = [](const std::optional<double>& v) { return v ? format2(*v) : "-"; };
  for (const auto& [type, c] : report.categories) {
    rows.push_back({std::string(bench::to_string(type)), format2(c.binary.acc),
                    format2(c.binary.p_acc), format2(c.binary.q_acc), format2(c.mc.acc),
                    format2(c.mc.p_acc), format2(c.score), opt(c.binary.yer), opt(c.mc.aer)});
  }
  std::vector<std::size_t> width(head.size());
  for (std::size_t k = 0; k < head.size(); ++k) {
    width[k] = head[k].size();
    for (const auto& r : rows) width[k] = std::max(width[k], r[k].size());
  }
  std::ostringstream out;
  const auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k == 0) {
        out << std::left << std::setw(static_cast<int>(width[k])) << cells[k];
      } else {
        out << "  " << std::right << std::setw(static_cast<int>(width[k])) << cells[k];
      }
    }
    out << '\n';
  };
  emit(head);
  for (const auto& r : rows) emit(r);
  out << "MVH-Score  " << opt(report.mvh_score) << '\n';
  return out.str();
}

}  // namespace mvh::metrics

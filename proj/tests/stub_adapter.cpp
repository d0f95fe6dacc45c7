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

// Test-only stdio adapter.
//
//   mvh_stub_adapter yes|adversarial|oracle [--qa FILE] [--fault KIND]
//
// Faults: drop-first (ignore the first request), garbage (one unparseable
// line before every answer), unknown-id (one stray answer up front),
// reverse (answer each window of four requests in reverse order),
// mute (never answer), exit (quit after the first request).

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "stub_answers.hpp"

int main(int argc, char** argv) {
  mvh::testing::StubPolicy policy;
  std::string qa, fault;
  for (int k = 1; k < argc; ++k) {
    const std::string arg = argv[k];
    if (arg == "--qa" && k + 1 < argc) {
      qa = argv[++k];
    } else if (arg == "--fault" && k + 1 < argc) {
      fault = argv[++k];
    } else {
      policy.mode = arg;
    }
  }
  if (policy.mode != "yes" && policy.mode != "adversarial" && policy.mode != "oracle") {
    std::cerr << "usage: mvh_stub_adapter yes|adversarial|oracle [--qa FILE] [--fault KIND]\n";
    return 2;
  }
  if (policy.mode == "oracle") {
    std::ifstream in(qa);
    if (!in) {
      std::cerr << "oracle mode needs --qa FILE\n";
      return 2;
    }
    std::stringstream text;
    text << in.rdbuf();
    policy.keys = mvh::testing::answer_keys(mvh::bench::parse_jsonl(text.str()));
  }

  if (fault == "unknown-id") {
    std::cout << R"({"id":"no-such-id","answer_text":"Yes"})" << std::endl;
  }
  std::vector<std::string> window;
  bool first = true;
  for (std::string line; std::getline(std::cin, line);) {
    if (line.empty()) continue;
    const auto req = mvh::harness::parse_request(line);
    if (fault == "mute") continue;
    if (fault == "drop-first" && first) {
      first = false;
      continue;
    }
    first = false;
    const std::string out =
        mvh::harness::to_json(mvh::harness::AdapterResponse{req.id, policy.answer(req)}).dump();
    if (fault == "garbage") std::cout << "not json" << "\n";
    if (fault == "reverse") {
      window.push_back(out);
      if (window.size() == 4) {
        for (auto it = window.rbegin(); it != window.rend(); ++it) std::cout << *it << "\n";
        std::cout.flush();
        window.clear();
      }
      continue;
    }
    std::cout << out << std::endl;
    if (fault == "exit") return 0;
  }
  for (auto it = window.rbegin(); it != window.rend(); ++it) std::cout << *it << "\n";
  std::cout.flush();
  return 0;
}

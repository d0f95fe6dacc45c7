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

// Evaluation driver and model adapters.
//
// Wire protocol v1, one JSON object per line (stdio) or per POST /answer
// body (HTTP):
//   request   {"id", "image_refs": [..], "question", "options"?: [..]}
//   response  {"id", "answer_text"}
// With expose_adversarial set, MC requests also carry "adversarial_option"
// so stub adapters can answer adversarially.
//
// Adapter specs:
//   internal:yes | internal:adversarial | internal:oracle | internal:toy
//   stdio:<shell command>
//   http://host:port

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mvh/bench_gen.hpp"
#include "mvh/metrics.hpp"

namespace mvh::harness {

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdapterRequest {
  std::string id;
  std::array<std::string, 2> image_refs;
  std::string question;
  std::vector<std::string> options;  // empty for binary
  std::optional<std::string> adversarial_option;

  friend bool operator==(const AdapterRequest&, const AdapterRequest&) = default;
};

struct AdapterResponse {
  std::string id;
  std::string answer_text;

  friend bool operator==(const AdapterResponse&, const AdapterResponse&) = default;
};

AdapterRequest make_request(const bench::QARecord& record, bool expose_adversarial);
nlohmann::ordered_json to_json(const AdapterRequest& request);
nlohmann::ordered_json to_json(const AdapterResponse& response);
/// Throws ProtocolError on malformed input.
AdapterRequest parse_request(const std::string& text);
AdapterResponse parse_response(const std::string& text);

struct Outcome {
  std::optional<std::string> answer_text;  // nullopt when the request failed
  std::string error;
  int attempts = 0;
};

struct TransportOptions {
  std::size_t parallel = 4;
  double timeout_seconds = 30.0;
  int retries = 1;
};

/// Answers a batch. Outcomes come back in request order.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::vector<Outcome> run(const std::vector<AdapterRequest>& requests,
                                   const TransportOptions& options) = 0;
  /// Responses that matched no outstanding request, plus unreadable lines.
  std::size_t stray_responses() const { return stray_; }

 protected:
  std::size_t stray_ = 0;
};

/// Builds a transport from an adapter spec. internal:oracle and
/// internal:adversarial read from `records`. Throws std::invalid_argument on
/// an unknown spec.
std::unique_ptr<Transport> make_transport(const std::string& spec,
                                          const std::vector<bench::QARecord>& records,
                                          std::uint32_t seed = 0);

/// Newline-delimited JSON over a child process's stdin/stdout, with at most
/// `parallel` requests in flight.
class StdioTransport : public Transport {
 public:
  explicit StdioTransport(std::string command) : command_(std::move(command)) {}
  std::vector<Outcome> run(const std::vector<AdapterRequest>& requests,
                           const TransportOptions& options) override;

 private:
  std::string command_;
};

/// POST /answer on an HTTP server, `parallel` connections.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(std::string base_url) : base_url_(std::move(base_url)) {}
  std::vector<Outcome> run(const std::vector<AdapterRequest>& requests,
                           const TransportOptions& options) override;

 private:
  std::string base_url_;
};

struct EvalOptions {
  TransportOptions transport;
  bool expose_adversarial = false;
  double max_failure_fraction = 0.5;
};

struct PredictionLog {
  std::string id;
  std::optional<std::string> answer_text;
  metrics::Answer parsed;
  bool correct = false;
  std::string error;
  int attempts = 0;
};

struct EvalResult {
  std::vector<PredictionLog> log;  // record order
  metrics::MetricReport report;
  std::size_t protocol_failures = 0;
  std::size_t stray_responses = 0;
  bool failed = false;  // protocol_failures above the allowed fraction
};

EvalResult evaluate(const std::vector<bench::QARecord>& records, Transport& transport,
                    const EvalOptions& options);

nlohmann::ordered_json to_json(const PredictionLog& entry);

}  // namespace mvh::harness

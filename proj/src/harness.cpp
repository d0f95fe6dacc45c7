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

#include "mvh/harness.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "mvh/decoder.hpp"
#include "mvh/log.hpp"

namespace mvh::harness {

using nlohmann::json;
using nlohmann::ordered_json;

AdapterRequest make_request(const bench::QARecord& record, bool expose_adversarial) {
  AdapterRequest r;
  r.id = record.id;
  r.image_refs = record.image_refs;
  r.question = record.question;
  if (record.qtype == bench::QType::multiple_choice) {
    r.options = record.options;
    if (expose_adversarial) r.adversarial_option = record.adversarial_option;
  }
  return r;
}

ordered_json to_json(const AdapterRequest& request) {
  ordered_json doc;
  doc["id"] = request.id;
  doc["image_refs"] = {request.image_refs[0], request.image_refs[1]};
  doc["question"] = request.question;
  if (!request.options.empty()) doc["options"] = request.options;
  if (request.adversarial_option) doc["adversarial_option"] = *request.adversarial_option;
  return doc;
}

ordered_json to_json(const AdapterResponse& response) {
  return ordered_json{{"id", response.id}, {"answer_text", response.answer_text}};
}

namespace {

json parse_object(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ProtocolError("message is not a JSON object");
  return doc;
}

std::string string_field(const json& doc, const char* field) {
  if (!doc.contains(field) || !doc[field].is_string()) {
    throw ProtocolError(std::string("missing string field '") + field + "'");
  }
  return doc[field].get<std::string>();
}

}  // namespace

AdapterRequest parse_request(const std::string& text) {
  const json doc = parse_object(text);
  AdapterRequest r;
  r.id = string_field(doc, "id");
  r.question = string_field(doc, "question");
  if (!doc.contains("image_refs") || !doc["image_refs"].is_array() ||
      doc["image_refs"].size() != 2) {
    throw ProtocolError("field 'image_refs' must hold two strings");
  }
  for (int k = 0; k < 2; ++k) {
    if (!doc["image_refs"][k].is_string()) throw ProtocolError("image_refs must be strings");
    r.image_refs[k] = doc["image_refs"][k].get<std::string>();
  }
  if (doc.contains("options")) {
    if (!doc["options"].is_array()) throw ProtocolError("field 'options' must be an array");
    for (const auto& o : doc["options"]) {
      if (!o.is_string()) throw ProtocolError("options must be strings");
      r.options.push_back(o.get<std::string>());
    }
  }
  if (doc.contains("adversarial_option")) r.adversarial_option = string_field(doc, "adversarial_option");
  return r;
}

AdapterResponse parse_response(const std::string& text) {
  const json doc = parse_object(text);
  return {string_field(doc, "id"), string_field(doc, "answer_text")};
}

namespace {

using Clock = std::chrono::steady_clock;

// Answers requests in-process. Each answer is a pure function of the
// request, so order and parallelism do not matter.
class FunctionTransport : public Transport {
 public:
  using Fn = std::function<std::string(const AdapterRequest&)>;
  explicit FunctionTransport(Fn fn) : fn_(std::move(fn)) {}

  std::vector<Outcome> run(const std::vector<AdapterRequest>& requests,
                           const TransportOptions&) override {
    std::vector<Outcome> out(requests.size());
    for (std::size_t k = 0; k < requests.size(); ++k) {
      out[k].attempts = 1;
      try {
        out[k].answer_text = fn_(requests[k]);
      } catch (const std::exception& e) {
        out[k].error = e.what();
      }
    }
    return out;
  }

 private:
  Fn fn_;
};

std::string toy_answer(const DecoderWeights& w, const AdapterRequest& r) {
  const auto vocab = static_cast<std::uint64_t>(w.config().vocab_size);
  const auto tokens_of = [&](const std::string& s, std::size_t n) {
    std::vector<TokenId> out;
    std::uint64_t h = bench::fnv1a(s);
    for (std::size_t k = 0; k < n; ++k) {
      out.push_back(static_cast<TokenId>(h % vocab));
      h = bench::stream_seed(h, "t");
    }
    return out;
  };
  std::vector<TokenId> text;
  std::size_t start = 0;
  while (start <= r.question.size()) {
    const std::size_t end = std::min(r.question.find(' ', start), r.question.size());
    if (end > start) text.push_back(tokens_of(r.question.substr(start, end - start), 1)[0]);
    start = end + 1;
  }
  const RoleMap rm = build_sequence({0}, {{1, tokens_of(r.image_refs[0], 4)},
                                          {2, tokens_of(r.image_refs[1], 4)}}, text);
  const TokenId t = greedy_decode(w, rm, 1, MaskPlan{}, kernels::Backend::serial)[0];
  if (r.options.empty()) return t % 2 == 0 ? "Yes" : "No";
  return bench::option_letter(static_cast<std::size_t>(t) % r.options.size());
}

}  // namespace

std::unique_ptr<Transport> make_transport(const std::string& spec,
                                          const std::vector<bench::QARecord>& records,
                                          std::uint32_t seed) {
  std::map<std::string, const bench::QARecord*> by_id;
  for (const auto& r : records) by_id[r.id] = &r;
  const auto lookup = [by_id](const std::string& id) -> const bench::QARecord& {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw ProtocolError("unknown record id " + id);
    return *it->second;
  };

  if (spec == "internal:yes") {
    return std::make_unique<FunctionTransport>(
        [](const AdapterRequest& r) { return r.options.empty() ? "Yes" : "A"; });
  }
  if (spec == "internal:adversarial") {
    return std::make_unique<FunctionTransport>([lookup](const AdapterRequest& r) -> std::string {
      if (r.options.empty()) return "Yes";
      return lookup(r.id).adversarial_option;
    });
  }
  if (spec == "internal:oracle") {
    return std::make_unique<FunctionTransport>(
        [lookup](const AdapterRequest& r) { return lookup(r.id).answer_key; });
  }
  if (spec == "internal:toy") {
    auto weights = std::make_shared<DecoderWeights>(init_decoder(DecoderConfig{}, seed));
    return std::make_unique<FunctionTransport>(
        [weights](const AdapterRequest& r) { return toy_answer(*weights, r); });
  }
  if (spec.rfind("stdio:", 0) == 0 && spec.size() > 6) {
    return std::make_unique<StdioTransport>(spec.substr(6));
  }
  if (spec.rfind("http://", 0) == 0) {
    return std::make_unique<HttpTransport>(spec);
  }
  throw std::invalid_argument("unknown adapter '" + spec +
                              "'; expected internal:yes|adversarial|oracle|toy, "
                              "stdio:<command> or http://host:port");
}

namespace {

class Child {
 public:
  explicit Child(const std::string& command) {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
      throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
    }
    pid_ = fork();
    if (pid_ < 0) throw std::runtime_error(std::string("fork: ") + std::strerror(errno));
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_ = to_child[1];
    out_ = from_child[0];
    fcntl(out_, F_SETFL, fcntl(out_, F_GETFL) | O_NONBLOCK);
  }

  Child(const Child&) = delete;
  Child& operator=(const Child&) = delete;

  ~Child() {
    close_input();
    if (out_ >= 0) close(out_);
    // Give the adapter a moment to exit on EOF, then stop it.
    for (int k = 0; k < 50; ++k) {
      if (waitpid(pid_, nullptr, WNOHANG) == pid_) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
  }

  bool send(const std::string& line) {
    std::size_t done = 0;
    while (done < line.size()) {
      const ssize_t n = write(in_, line.data() + done, line.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      done += static_cast<std::size_t>(n);
    }
    return true;
  }

  void close_input() {
    if (in_ >= 0) close(in_);
    in_ = -1;
  }

  int out_fd() const { return out_; }

 private:
  pid_t pid_ = -1;
  int in_ = -1;
  int out_ = -1;
};

}  // namespace

std::vector<Outcome> StdioTransport::run(const std::vector<AdapterRequest>& requests,
                                         const TransportOptions& options) {
  signal(SIGPIPE, SIG_IGN);
  std::vector<Outcome> out(requests.size());
  if (requests.empty()) return out;
  Child child(command_);

  struct InFlight {
    std::size_t index;
    Clock::time_point deadline;
  };
  std::map<std::string, std::size_t> index_of;
  for (std::size_t k = 0; k < requests.size(); ++k) {
    if (!index_of.emplace(requests[k].id, k).second) {
      throw std::invalid_argument("duplicate request id " + requests[k].id);
    }
  }
  const auto timeout = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(options.timeout_seconds));
  const std::size_t parallel = std::max<std::size_t>(1, options.parallel);

  std::deque<std::size_t> pending;
  for (std::size_t k = 0; k < requests.size(); ++k) pending.push_back(k);
  std::map<std::string, InFlight> inflight;
  std::string buffer;
  bool dead = false;

  const auto send = [&](std::size_t k) {
    ++out[k].attempts;
    if (!child.send(to_json(requests[k]).dump() + "\n")) {
      out[k].error = "adapter exited";
      dead = true;
      return;
    }
    inflight[requests[k].id] = {k, Clock::now() + timeout};
  };

  while (!dead && (!pending.empty() || !inflight.empty())) {
    while (inflight.size() < parallel && !pending.empty()) {
      send(pending.front());
      pending.pop_front();
    }
    if (dead) break;
    auto next = Clock::time_point::max();
    for (const auto& [id, f] : inflight) next = std::min(next, f.deadline);
    const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(next - Clock::now());
    pollfd pfd{child.out_fd(), POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(std::max<long long>(0, wait.count())));
    if (ready > 0) {
      char chunk[4096];
      const ssize_t n = read(child.out_fd(), chunk, sizeof chunk);
      if (n == 0) {
        dead = true;
        break;
      }
      if (n > 0) buffer.append(chunk, static_cast<std::size_t>(n));
      for (std::size_t nl; (nl = buffer.find('\n')) != std::string::npos;) {
        const std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
          AdapterResponse resp = parse_response(line);
          const auto it = inflight.find(resp.id);
          if (it == inflight.end()) {
            ++stray_;
            log::warn("adapter answered unknown or settled id '" + resp.id + "'");
            continue;
          }
          out[it->second.index].answer_text = std::move(resp.answer_text);
          out[it->second.index].error.clear();
          inflight.erase(it);
        } catch (const ProtocolError& e) {
          ++stray_;
          log::warn(std::string("adapter sent a bad line: ") + e.what());
        }
      }
    }
    const auto now = Clock::now();
    std::vector<std::size_t> expired;
    for (auto it = inflight.begin(); it != inflight.end();) {
      if (it->second.deadline <= now) {
        expired.push_back(it->second.index);
        it = inflight.erase(it);
      } else {
        ++it;
      }
    }
    for (std::size_t k : expired) {
      if (out[k].attempts <= options.retries) {
        send(k);
      } else {
        out[k].error = "timeout";
      }
    }
  }
  for (const auto& [id, f] : inflight) out[f.index].error = "adapter exited";
  for (std::size_t k : pending) out[k].error = "adapter exited";
  return out;
}

std::vector<Outcome> HttpTransport::run(const std::vector<AdapterRequest>& requests,
                                        const TransportOptions& options) {
  std::vector<Outcome> out(requests.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> stray{0};
  const auto seconds = static_cast<time_t>(options.timeout_seconds);
  const auto micros = static_cast<time_t>((options.timeout_seconds - static_cast<double>(seconds)) * 1e6);

  const auto worker = [&]() {
    httplib::Client client(base_url_);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    for (std::size_t k; (k = next.fetch_add(1)) < requests.size();) {
      const std::string body = to_json(requests[k]).dump();
      Outcome& o = out[k];
      for (int attempt = 0; attempt <= options.retries; ++attempt) {
        ++o.attempts;
        const auto res = client.Post("/answer", body, "application/json");
        if (!res) {
          o.error = "http: " + httplib::to_string(res.error());
          continue;
        }
        if (res->status != 200) {
          o.error = "http status " + std::to_string(res->status);
          continue;
        }
        try {
          AdapterResponse resp = parse_response(res->body);
          if (resp.id != requests[k].id) {
            stray.fetch_add(1);
            o.error = "response id '" + resp.id + "' does not match request";
            continue;
          }
          o.answer_text = std::move(resp.answer_text);
          o.error.clear();
          break;
        } catch (const ProtocolError& e) {
          stray.fetch_add(1);
          o.error = e.what();
        }
      }
    }
  };
  const std::size_t n = std::min(std::max<std::size_t>(1, options.parallel), requests.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  stray_ += stray.load();
  return out;
}

EvalResult evaluate(const std::vector<bench::QARecord>& records, Transport& transport,
                    const EvalOptions& options) {
  std::vector<AdapterRequest> requests;
  for (const auto& r : records) requests.push_back(make_request(r, options.expose_adversarial));
  const std::vector<Outcome> outcomes = transport.run(requests, options.transport);

  EvalResult result;
  std::map<std::string, metrics::Answer> predictions;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    const auto& o = outcomes[k];
    PredictionLog entry;
    entry.id = r.id;
    entry.answer_text = o.answer_text;
    entry.error = o.error;
    entry.attempts = o.attempts;
    if (o.answer_text) {
      entry.parsed = metrics::parse_answer(*o.answer_text, r);
    } else {
      ++result.protocol_failures;
    }
    entry.correct = entry.parsed && *entry.parsed == r.answer_key;
    predictions[r.id] = entry.parsed;
    result.log.push_back(std::move(entry));
  }
  result.stray_responses = transport.stray_responses();
  result.report = metrics::evaluate(records, predictions);
  result.failed = !records.empty() &&
                  static_cast<double>(result.protocol_failures) >
                      options.max_failure_fraction * static_cast<double>(records.size());
  return result;
}

ordered_json to_json(const PredictionLog& entry) {
  ordered_json doc;
  doc["id"] = entry.id;
  doc["answer_text"] = entry.answer_text ? ordered_json(*entry.answer_text) : ordered_json(nullptr);
  doc["parsed"] = entry.parsed ? ordered_json(*entry.parsed) : ordered_json(nullptr);
  doc["correct"] = entry.correct;
  doc["attempts"] = entry.attempts;
  if (!entry.error.empty()) doc["error"] = entry.error;
  return doc;
}

}  // namespace mvh::harness

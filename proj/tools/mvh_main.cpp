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

// mvh gen | eval | sweep | decode
//
// Exit codes: 0 success, 1 bad data or runtime failure, 2 usage error or
// unreadable input, 3 too many adapter protocol failures.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mvh/bench_gen.hpp"
#include "mvh/grounding.hpp"
#include "mvh/harness.hpp"
#include "mvh/log.hpp"
#include "mvh/metrics.hpp"
#include "mvh/rscd.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;
constexpr int kProtocol = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("MVH_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::strlen(env)) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("MVH_SEED='") + env + "' is not an unsigned integer");
  }
  return 0;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---- gen

struct GenArgs {
  std::string manifest, out;
  std::optional<std::uint64_t> seed;
  std::size_t max_per_pair = 1;
  double split_ratio = 0.9;
  bool lint = false;
};

int run_gen(const GenArgs& a) {
  std::vector<mvh::bench::PairFile> pairs;
  try {
    pairs = mvh::bench::read_manifest(a.manifest);
  } catch (const mvh::bench::ManifestError& e) {
    std::cerr << "mvh gen: " << a.manifest << ": " << e.what() << "\n";
    return kFailure;
  } catch (const std::runtime_error& e) {
    std::cerr << "mvh gen: " << e.what() << "\n";
    return kUsage;
  }
  if (a.lint) {
    std::size_t warnings = 0;
    for (const auto& pf : pairs) {
      for (const auto& w : mvh::bench::lint_pair_file(pf)) {
        std::cerr << "lint: " << w << "\n";
        ++warnings;
      }
    }
    std::cerr << "lint: " << warnings << " warning(s)\n";
  }
  mvh::bench::GenOptions opt;
  opt.seed = resolve_seed(a.seed);
  opt.max_per_pair = a.max_per_pair;
  opt.split_ratio = a.split_ratio;
  const auto result = mvh::bench::generate(pairs, opt);
  write_file(a.out, mvh::bench::to_jsonl(result.records));

  const auto& s = result.summary;
  std::cout << "pairs " << pairs.size() << ", records " << result.records.size() << "\n";
  const auto line = [](const std::string& name, const mvh::bench::StratumCount& c) {
    std::cout << std::left << std::setw(28) << name << " groups " << std::setw(5) << c.groups
              << " binary " << std::setw(6) << c.binary << " mc " << std::setw(6)
              << c.multiple_choice << " test/val " << c.test_groups << "/"
              << c.validation_groups << "\n";
  };
  for (const auto& [name, c] : s.types) line(name, c);
  for (const auto& [name, c] : s.strata) line("  " + name, c);
  if (s.skipped > 0) {
    std::cout << "skipped " << s.skipped << " (pair, type) combination(s) without a valid pick\n";
  }
  return kOk;
}

// ---- eval

struct EvalArgs {
  std::string qa, adapter, out, predictions, split = "all";
  std::optional<std::uint64_t> seed;
  mvh::harness::EvalOptions options;
};

int run_eval(const EvalArgs& a) {
  std::vector<mvh::bench::QARecord> records;
  try {
    records = mvh::bench::parse_jsonl(read_file(a.qa));
  } catch (const mvh::bench::GenError& e) {
    std::cerr << "mvh eval: " << a.qa << ": " << e.what() << "\n";
    return kFailure;
  }
  if (a.split != "all") {
    const auto want = mvh::bench::parse_split(a.split);
    std::erase_if(records, [&](const auto& r) { return r.split != want; });
  }
  if (records.empty()) {
    std::cerr << "mvh eval: no records to evaluate\n";
    return kFailure;
  }
  const auto seed = static_cast<std::uint32_t>(resolve_seed(a.seed));
  std::unique_ptr<mvh::harness::Transport> transport;
  try {
    transport = mvh::harness::make_transport(a.adapter, records, seed);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto result = mvh::harness::evaluate(records, *transport, a.options);

  const std::string log_path = a.predictions.empty() ? a.out + ".predictions.jsonl" : a.predictions;
  std::string log;
  for (const auto& entry : result.log) log += mvh::harness::to_json(entry).dump() + "\n";
  write_file(log_path, log);
  write_file(a.out, mvh::metrics::to_json(result.report).dump(2) + "\n");

  std::cout << mvh::metrics::to_table(result.report);
  std::cout << "records " << records.size() << ", protocol failures "
            << result.protocol_failures << ", stray responses " << result.stray_responses
            << "\n";
  if (result.failed) {
    std::cerr << "mvh eval: more than half of the requests failed\n";
    return kProtocol;
  }
  return kOk;
}

// ---- decoder sources shared by sweep and decode

struct Source {
  std::string preset;   // "grounding" or "grounding:S"
  std::string weights;  // path
  bool biased = false;
};

struct LoadedSource {
  std::optional<mvh::grounding::Vocabulary> vocab;
  std::shared_ptr<mvh::DecoderWeights> weights;
};

LoadedSource load_source(const Source& s) {
  if (s.preset.empty() == s.weights.empty()) {
    throw UsageError("give exactly one of --preset or --weights");
  }
  if (!s.preset.empty()) {
    std::size_t symbols = 8;
    if (s.preset.rfind("grounding", 0) != 0) throw UsageError("unknown preset '" + s.preset + "'");
    if (s.preset.size() > 9) {
      if (s.preset[9] != ':') throw UsageError("unknown preset '" + s.preset + "'");
      try {
        symbols = std::stoul(s.preset.substr(10));
      } catch (const std::exception&) {
        throw UsageError("bad symbol count in '" + s.preset + "'");
      }
    }
    try {
      auto preset = mvh::grounding::grounding_preset(symbols, s.biased);
      return {preset.vocab, std::make_shared<mvh::DecoderWeights>(std::move(preset.weights))};
    } catch (const mvh::ConfigError& e) {
      throw UsageError(e.what());
    }
  }
  if (s.biased) throw UsageError("--biased applies to --preset only");
  LoadedSource out;
  try {
    out.weights = std::make_shared<mvh::DecoderWeights>(mvh::load_weights(s.weights));
  } catch (const mvh::ConfigError& e) {
    throw std::runtime_error(s.weights + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  const std::size_t v = out.weights->config().vocab_size;
  if (v > 6 && (v - 6) % 3 == 0) out.vocab = mvh::grounding::Vocabulary{(v - 6) / 3};
  return out;
}

std::vector<mvh::GroundingTask> grounding_tasks(const mvh::grounding::Vocabulary& vocab) {
  std::vector<mvh::GroundingTask> tasks;
  for (const auto& inst : mvh::grounding::all_instances(vocab.num_symbols)) {
    tasks.push_back({mvh::grounding::instance_prompt(vocab, inst),
                     mvh::grounding::expected_answer(vocab, inst)});
  }
  return tasks;
}

// ---- sweep

struct SweepArgs {
  Source source;
  std::size_t window = 2;
  std::string mask = "t2t";
  double rho = 0.8;
  std::string out;
};

int run_sweep(const SweepArgs& a) {
  const auto src = load_source(a.source);
  if (!src.vocab) throw UsageError("weights do not use the grounding vocabulary; no task set");
  mvh::SweepConfig sweep;
  sweep.window = a.window;
  sweep.rho = a.rho;
  sweep.mask = a.mask == "t2t" ? mvh::SweepMask::t2t : mvh::SweepMask::reference_shift;
  sweep.tasks = grounding_tasks(*src.vocab);
  std::vector<mvh::SweepPoint> points;
  try {
    points = mvh::layer_sweep(*src.weights, sweep);
  } catch (const mvh::ConfigError& e) {
    throw UsageError(e.what());
  }
  const auto range = mvh::select_layer_range(points, a.window);

  std::ostringstream csv;
  csv << "window_start,reference_accuracy\n";
  for (const auto& p : points) {
    csv << p.window_start << "," << std::setprecision(17) << p.accuracy << "\n";
  }
  csv << "# layer_range," << range.first << "," << range.last << "\n";
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    write_file(a.out, csv.str());
    for (const auto& p : points) {
      std::cout << "window " << p.window_start << ".." << p.window_start + a.window - 1
                << "  accuracy " << std::fixed << std::setprecision(4) << p.accuracy << "\n";
    }
    std::cout << "layer range " << range.first << ".." << range.last << "\n";
  }
  return kOk;
}

// ---- decode

struct DecodeArgs {
  Source source;
  std::string prompt, instance, profile = "toy", config;
  std::size_t steps = 1;
  std::optional<double> alpha, rho, beta;
  std::optional<std::size_t> layer_start, layer_end;
  bool per_head = false;
};

std::vector<mvh::TokenId> parse_tokens(const std::string& list) {
  std::vector<mvh::TokenId> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<mvh::TokenId>(v));
    } catch (const std::exception&) {
      throw UsageError("bad token id '" + item + "'");
    }
  }
  return out;
}

// "sys=0;view1=6,7;view2=8;text=1,2,4"
mvh::RoleMap parse_prompt(const std::string& spec) {
  std::vector<mvh::TokenId> system, text;
  std::vector<mvh::ViewTokens> views;
  std::stringstream ss(spec);
  for (std::string part; std::getline(ss, part, ';');) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw UsageError("prompt part '" + part + "' lacks '='");
    const std::string key = part.substr(0, eq);
    const auto tokens = parse_tokens(part.substr(eq + 1));
    if (key == "sys") {
      system = tokens;
    } else if (key == "text") {
      text = tokens;
    } else if (key.rfind("view", 0) == 0 && key.size() > 4) {
      try {
        views.push_back({std::stoi(key.substr(4)), tokens});
      } catch (const std::exception&) {
        throw UsageError("bad view key '" + key + "'");
      }
    } else {
      throw UsageError("unknown prompt part '" + key + "'");
    }
  }
  try {
    return mvh::build_sequence(system, views, text);
  } catch (const mvh::RoleError& e) {
    throw UsageError(e.what());
  }
}

int run_decode(const DecodeArgs& a) {
  const auto src = load_source(a.source);
  if (a.prompt.empty() == a.instance.empty()) {
    throw UsageError("give exactly one of --prompt or --instance");
  }
  mvh::RoleMap rm = mvh::build_sequence({}, {}, {0});
  if (!a.instance.empty()) {
    if (!src.vocab) throw UsageError("--instance needs the grounding vocabulary");
    const auto v = parse_tokens(a.instance);
    if (v.size() != 3) throw UsageError("--instance takes a,b,view");
    const mvh::grounding::Instance inst{v[0], v[1], v[2]};
    if (inst.view1_symbol >= static_cast<int>(src.vocab->num_symbols) ||
        inst.view2_symbol >= static_cast<int>(src.vocab->num_symbols) ||
        (inst.queried_view != 1 && inst.queried_view != 2)) {
      throw UsageError("--instance out of range");
    }
    rm = mvh::grounding::instance_prompt(*src.vocab, inst);
  } else {
    rm = parse_prompt(a.prompt);
  }
  for (auto t : rm.tokens()) {
    if (static_cast<std::size_t>(t) >= src.weights->config().vocab_size) {
      throw UsageError("token " + std::to_string(t) + " is outside the vocabulary");
    }
  }

  mvh::RSCDConfig cfg;
  try {
    cfg = mvh::named_profile(a.profile);
    if (!a.config.empty()) cfg = mvh::load_profile(a.config, cfg);
  } catch (const mvh::ConfigError& e) {
    throw UsageError(e.what());
  }
  if (a.alpha) cfg.alpha = *a.alpha;
  if (a.rho) cfg.rho = *a.rho;
  if (a.beta) cfg.beta = *a.beta;
  if (a.layer_start.has_value() != a.layer_end.has_value()) {
    throw UsageError("--layer-start and --layer-end go together");
  }
  if (a.layer_start) cfg.layers = mvh::LayerRange{*a.layer_start, *a.layer_end};
  cfg.per_head_selection = a.per_head;
  if (!cfg.layers) {
    if (!src.vocab) throw UsageError("profile has no layer range; pass --layer-start/--layer-end");
    mvh::SweepConfig sweep;
    sweep.tasks = grounding_tasks(*src.vocab);
    const auto points = mvh::layer_sweep(*src.weights, sweep);
    cfg.layers = mvh::select_layer_range(points, sweep.window);
    std::cout << "layer range from sweep: " << cfg.layers->first << ".." << cfg.layers->last
              << "\n";
  }
  try {
    cfg.validate(src.weights->config().num_layers);
  } catch (const mvh::ConfigError& e) {
    throw UsageError(e.what());
  }
  if (a.steps == 0) throw UsageError("--steps must be >= 1");

  const auto base = mvh::greedy_decode(*src.weights, rm, a.steps);
  const auto rscd = mvh::rscd_decode(*src.weights, rm, a.steps, cfg);
  std::cout << "profile alpha=" << cfg.alpha << " rho=" << cfg.rho << " layers="
            << cfg.layers->first << ".." << cfg.layers->last << " beta=" << cfg.beta << "\n";
  std::cout << std::left << std::setw(6) << "step" << std::setw(8) << "base" << "rscd\n";
  for (std::size_t k = 0; k < a.steps; ++k) {
    std::cout << std::left << std::setw(6) << k << std::setw(8) << base[k] << rscd[k]
              << (base[k] != rscd[k] ? "  *" : "") << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference shift contrastive decoding and MVH-Bench tools"};
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Log info messages");
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a QA set from a pair-file manifest");
  g->add_option("manifest,--manifest", gen.manifest, "Manifest: one pair-file path or JSON object per line")
      ->required();
  g->add_option("-o,--out", gen.out, "Output JSON-lines file")->required();
  g->add_option("--seed", gen.seed, "Seed (falls back to MVH_SEED, then 0)");
  g->add_option("--max-per-pair", gen.max_per_pair, "Groups per pair file and type")
      ->check(CLI::PositiveNumber);
  g->add_option("--split-ratio", gen.split_ratio, "Test share per stratum")
      ->check(CLI::Range(0.0, 1.0));
  g->add_flag("--lint", gen.lint, "Report duplicate descriptors and whitespace problems");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a QA set against a model adapter");
  e->add_option("qa,--qa", ev.qa, "QA JSON-lines file")->required();
  e->add_option("-a,--adapter", ev.adapter,
                "internal:yes|adversarial|oracle|toy, stdio:<command> or http://host:port")
      ->required();
  e->add_option("-o,--out", ev.out, "MetricReport JSON path")->required();
  e->add_option("--predictions", ev.predictions, "Prediction log (default <out>.predictions.jsonl)");
  e->add_option("--split", ev.split, "test, validation or all")
      ->check(CLI::IsMember({"all", "test", "validation", "unassigned"}));
  e->add_option("--parallel", ev.options.transport.parallel, "Requests in flight")
      ->check(CLI::PositiveNumber);
  e->add_option("--timeout", ev.options.transport.timeout_seconds, "Seconds per request")
      ->check(CLI::PositiveNumber);
  e->add_option("--retries", ev.options.transport.retries, "Retries per request")
      ->check(CLI::NonNegativeNumber);
  e->add_flag("--expose-adversarial", ev.options.expose_adversarial,
              "Send the adversarial option letter (for stub adapters)");
  e->add_option("--seed", ev.seed, "Seed for internal:toy");

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "Sliding-window layer masking sweep");
  s->add_option("--preset", sw.source.preset, "grounding or grounding:<symbols>");
  s->add_option("--weights", sw.source.weights, "Weight snapshot");
  s->add_flag("--biased", sw.source.biased, "Distractor-biased preset");
  s->add_option("-w,--w,--window", sw.window, "Window width");
  s->add_option("--mask", sw.mask, "t2t or rs")->check(CLI::IsMember({"t2t", "rs"}));
  s->add_option("--rho", sw.rho, "Masking ratio for --mask rs")->check(CLI::Range(0.0, 1.0));
  s->add_option("-o,--out", sw.out, "CSV output (stdout if omitted)");

  DecodeArgs de;
  auto* d = app.add_subcommand("decode", "Greedy and RSCD token streams side by side");
  d->add_option("--preset", de.source.preset, "grounding or grounding:<symbols>");
  d->add_option("--weights", de.source.weights, "Weight snapshot");
  d->add_flag("--biased", de.source.biased, "Distractor-biased preset");
  d->add_option("--prompt", de.prompt, "sys=..;view1=..;view2=..;text=.. (comma lists)");
  d->add_option("--instance", de.instance, "Grounding instance a,b,view");
  d->add_option("--steps", de.steps, "Tokens to generate");
  d->add_option("--profile", de.profile, "qwen2.5-vl-7b, llava-onevision-7b or toy");
  d->add_option("--config", de.config, "key = value profile file");
  d->add_option("--alpha", de.alpha, "Contrast strength");
  d->add_option("--rho", de.rho, "Masking ratio");
  d->add_option("--beta", de.beta, "Plausibility cutoff");
  d->add_option("--layer-start", de.layer_start, "First layer of the range");
  d->add_option("--layer-end", de.layer_end, "Last layer of the range");
  d->add_flag("--per-head", de.per_head, "Rank attention per head");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }
  mvh::log::set_level(quiet ? mvh::log::Level::quiet
                            : verbose ? mvh::log::Level::info : mvh::log::Level::warn);
  try {
    if (g->parsed()) return run_gen(gen);
    if (e->parsed()) return run_eval(ev);
    if (s->parsed()) return run_sweep(sw);
    if (d->parsed()) return run_decode(de);
  } catch (const UsageError& err) {
    std::cerr << "mvh: " << err.what() << "\n";
    return kUsage;
  } catch (const std::exception& err) {
    std::cerr << "mvh: " << err.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

// Copyright 2026 The guidegen Authors.
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


// Command-line front end. Talks to the library only through the C API.
//
// Exit codes: 0 success, 1 output produced with warnings, 2 usage or
// configuration error, 3 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "guidegen/guidegen.h"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitWarnings = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Options {
  std::string config;
  std::string output_dir;
  std::optional<unsigned long long> seed;
  bool resume = false;
  bool quiet = false;
  bool as_json = false;
  std::vector<std::string> sets;

  // generate overrides
  std::string corpus, corpus_format, backend, base_url, model, cache, grounding;
  std::optional<unsigned long long> sample_size, max_new_tokens, parallelism, max_document_words;
  std::optional<double> temperature, top_p;
  bool keep_empty = false;

  std::string dataset;
  std::string labels_dir;
  bool case_insensitive = false;
  std::size_t top_k = 10;
  std::string train_out;
  std::string gold_dir, pred_dir, match = "exact";
};

int exit_for(gg_status s) {
  switch (s) {
    case GG_OK:
      return kExitOk;
    case GG_ERR_INVALID_ARGUMENT:
    case GG_ERR_NOT_FOUND:
    case GG_ERR_CONFIG:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

int fail(gg_status s) {
  std::cerr << "error: " << gg_last_error() << "\n";
  return exit_for(s);
}

struct ConfigHandle {
  gg_config* ptr = nullptr;
  ~ConfigHandle() { gg_config_free(ptr); }
};

std::string take(char* s) {
  std::string out = s == nullptr ? "" : s;
  gg_string_free(s);
  return out;
}

// Loads --config and applies every override flag.
gg_status load_config(const Options& o, ConfigHandle& h) {
  if (o.config.empty()) {
    std::cerr << "error: --config is required\n";
    return GG_ERR_INVALID_ARGUMENT;
  }
  if (gg_status s = gg_config_load(o.config.c_str(), &h.ptr); s != GG_OK) return s;
  std::vector<std::pair<std::string, std::string>> kv;
  auto add = [&](const char* key, const std::string& v) {
    if (!v.empty()) kv.emplace_back(key, v);
  };
  add("output_dir", o.output_dir);
  add("corpus.path", o.corpus);
  add("corpus.format", o.corpus_format);
  add("client.backend", o.backend);
  add("client.base_url", o.base_url);
  add("client.model", o.model);
  add("client.cache", o.cache);
  add("grounding.mode", o.grounding);
  if (o.seed) add("sample.seed", std::to_string(*o.seed));
  if (o.sample_size) add("sample.size", std::to_string(*o.sample_size));
  if (o.max_new_tokens) add("client.max_new_tokens", std::to_string(*o.max_new_tokens));
  if (o.parallelism) add("client.parallelism", std::to_string(*o.parallelism));
  if (o.max_document_words) add("max_document_words", std::to_string(*o.max_document_words));
  if (o.temperature) add("client.temperature", json(*o.temperature).dump());
  if (o.top_p) add("client.top_p", json(*o.top_p).dump());
  if (o.keep_empty) add("keep_empty", "true");
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --set expects KEY=VALUE, got '" << s << "'\n";
      return GG_ERR_INVALID_ARGUMENT;
    }
    kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : kv) {
    if (gg_status s = gg_config_set(h.ptr, k.c_str(), v.c_str()); s != GG_OK) return s;
  }
  return GG_OK;
}

// Output directory of the configured run, used as a default location.
std::optional<std::string> config_output_dir(const Options& o) {
  if (o.config.empty()) return std::nullopt;
  ConfigHandle h;
  if (load_config(o, h) != GG_OK) return std::nullopt;
  char* out = nullptr;
  if (gg_config_describe(h.ptr, &out) != GG_OK) return std::nullopt;
  return json::parse(take(out)).at("output_dir").get<std::string>();
}

std::optional<std::string> default_dataset(const Options& o) {
  if (!o.dataset.empty()) return o.dataset;
  if (auto dir = config_output_dir(o)) return (fs::path(*dir) / "dataset.jsonl").string();
  std::cerr << "error: give a dataset path or --config\n";
  return std::nullopt;
}

int report(const Options& o, char* raw) {
  const json result = json::parse(take(raw));
  if (o.as_json) {
    std::cout << result.at("report").dump(2) << "\n";
  } else if (!o.quiet) {
    std::cout << result.at("table").get<std::string>();
  }
  const auto& warnings = result.at("warnings");
  if (!o.quiet) {
    for (const auto& w : warnings) std::cerr << "warning: " << w.get<std::string>() << "\n";
  }
  return warnings.empty() ? kExitOk : kExitWarnings;
}

int run_generate(const Options& o) {
  ConfigHandle h;
  if (gg_status s = load_config(o, h); s != GG_OK) return fail(s);
  char* out = nullptr;
  if (gg_status s = gg_generate(h.ptr, o.resume ? 1 : 0, &out); s != GG_OK) return fail(s);
  return report(o, out);
}

int run_validate(const Options& o) {
  const auto dataset = default_dataset(o);
  if (!dataset) return kExitUsage;
  std::string out_dir = o.output_dir;
  if (out_dir.empty()) out_dir = fs::path(*dataset).parent_path().string();
  if (out_dir.empty()) out_dir = ".";
  const char* grounding = o.grounding.empty() ? nullptr : o.grounding.c_str();
  char* out = nullptr;
  gg_status s = gg_validate_dataset(dataset->c_str(), grounding, out_dir.c_str(),
                                    o.keep_empty ? 1 : 0, &out);
  if (s != GG_OK) return fail(s);
  return report(o, out);
}

int run_stats(const Options& o) {
  const auto dataset = default_dataset(o);
  if (!dataset) return kExitUsage;
  char* out = nullptr;
  if (gg_status s = gg_stats(dataset->c_str(), o.top_k, &out); s != GG_OK) return fail(s);
  return report(o, out);
}

int run_overlap(const Options& o) {
  const auto dataset = default_dataset(o);
  if (!dataset) return kExitUsage;
  char* out = nullptr;
  gg_status s =
      gg_overlap(dataset->c_str(), o.labels_dir.c_str(), o.case_insensitive ? 1 : 0, &out);
  if (s != GG_OK) return fail(s);
  return report(o, out);
}

int run_emit_train(const Options& o) {
  const auto dataset = default_dataset(o);
  if (!dataset) return kExitUsage;
  std::string target = o.train_out;
  if (target.empty()) {
    fs::path dir = o.output_dir.empty() ? fs::path(*dataset).parent_path() : fs::path(o.output_dir);
    target = (dir / "train.jsonl").string();
  }
  const char* grounding = o.grounding.empty() ? nullptr : o.grounding.c_str();
  char* out = nullptr;
  gg_status s = gg_emit_train(dataset->c_str(), target.c_str(), grounding, &out);
  if (s != GG_OK) return fail(s);
  return report(o, out);
}

int run_eval(const Options& o) {
  char* out = nullptr;
  gg_status s = gg_eval(o.gold_dir.c_str(), o.pred_dir.c_str(), o.match.c_str(), &out);
  if (s != GG_OK) return fail(s);
  return report(o, out);
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Synthetic information-extraction data: generate, validate, analyse, evaluate"};
  app.set_version_flag("--version", gg_version());
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--config", o.config, "Run configuration file (JSON)");
  app.add_option("--output-dir", o.output_dir, "Output directory");
  app.add_option("--seed", o.seed, "Sampling seed");
  app.add_flag("--resume", o.resume, "Skip documents finished by an earlier run");
  app.add_flag("--quiet", o.quiet, "Print errors only");
  app.add_flag("--json", o.as_json, "Print the report as JSON");

  auto* gen = app.add_subcommand("generate", "Run the four-stage pipeline over the corpus");
  gen->add_option("--set", o.sets, "Override any config key: KEY=VALUE (repeatable)");
  gen->add_option("--corpus", o.corpus, "corpus.path");
  gen->add_option("--corpus-format", o.corpus_format, "corpus.format");
  gen->add_option("--sample-size", o.sample_size, "sample.size");
  gen->add_option("--backend", o.backend, "client.backend: http, replay or record");
  gen->add_option("--base-url", o.base_url, "client.base_url");
  gen->add_option("--model", o.model, "client.model");
  gen->add_option("--cache", o.cache, "client.cache");
  gen->add_option("--temperature", o.temperature, "client.temperature");
  gen->add_option("--top-p", o.top_p, "client.top_p");
  gen->add_option("--max-new-tokens", o.max_new_tokens, "client.max_new_tokens");
  gen->add_option("--parallelism", o.parallelism, "client.parallelism");
  gen->add_option("--grounding", o.grounding, "grounding.mode: exact, normalized or off");
  gen->add_option("--max-document-words", o.max_document_words, "max_document_words");
  gen->add_flag("--keep-empty", o.keep_empty, "Keep documents with no valid instances");

  auto* val = app.add_subcommand("validate", "Re-validate a dataset and write the filtered copy");
  val->add_option("dataset", o.dataset, "Dataset JSONL (default: the configured run's)");
  val->add_option("--grounding", o.grounding, "exact, normalized or off");
  val->add_flag("--keep-empty", o.keep_empty, "Keep records left with no instances");

  auto* stats = app.add_subcommand("stats", "Label statistics of a dataset");
  stats->add_option("dataset", o.dataset, "Dataset JSONL (default: the configured run's)");
  stats->add_option("--top-k", o.top_k, "Number of most and least frequent labels")
      ->capture_default_str();

  auto* overlap = app.add_subcommand("overlap", "Label overlap with benchmark label spaces");
  overlap->add_option("dataset", o.dataset, "Dataset JSONL (default: the configured run's)");
  overlap->add_option("--labels", o.labels_dir, "Directory of <benchmark>.<split>.txt files")
      ->required();
  overlap->add_flag("--case-insensitive", o.case_insensitive, "Compare labels ignoring case");

  auto* emit = app.add_subcommand("emit-train", "Write code-style training examples");
  emit->add_option("dataset", o.dataset, "Dataset JSONL (default: the configured run's)");
  emit->add_option("-o,--output", o.train_out, "Training file (default: train.jsonl)");
  emit->add_option("--grounding", o.grounding, "exact, normalized or off");

  auto* ev = app.add_subcommand("eval", "Score predictions against gold mentions");
  ev->add_option("--gold", o.gold_dir, "Directory of <dataset>.jsonl gold files")->required();
  ev->add_option("--pred", o.pred_dir, "Directory of <dataset>.jsonl prediction files")
      ->required();
  ev->add_option("--match", o.match, "exact or normalized")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (gen->parsed()) return run_generate(o);
  if (val->parsed()) return run_validate(o);
  if (stats->parsed()) return run_stats(o);
  if (overlap->parsed()) return run_overlap(o);
  if (emit->parsed()) return run_emit_train(o);
  if (ev->parsed()) return run_eval(o);
  return kExitUsage;
}

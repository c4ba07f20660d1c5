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


#include "guidegen/config.hpp"

#include <cstdlib>
#include <set>

#include "guidegen/error.hpp"
#include "guidegen/text.hpp"

namespace guidegen {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Keys whose override values are taken as literal strings.
const std::set<std::string>& string_keys() {
  static const std::set<std::string> keys = {
      "corpus.path",         "corpus.format",        "templates.summarize",
      "templates.structure", "templates.guidelines", "templates.instances",
      "client.backend",      "client.base_url",      "client.model",
      "client.api_key_env",  "client.cache",         "grounding.mode",
      "output_dir",          "grounding",
  };
  return keys;
}

const std::set<std::string>& path_keys() {
  static const std::set<std::string> keys = {
      "corpus.path",          "templates.summarize", "templates.structure",
      "templates.guidelines", "templates.instances", "client.cache",
      "output_dir",
  };
  return keys;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"corpus", {"path", "format"}},
      {"sample", {"size", "seed"}},
      {"templates", {"summarize", "structure", "guidelines", "instances"}},
      {"client",
       {"backend", "base_url", "model", "api_key_env", "cache", "temperature", "top_p",
        "max_new_tokens", "parallelism", "max_attempts", "timeout_seconds"}},
      {"grounding", {"mode", "case_fold", "collapse_whitespace"}},
      {"keep_empty", {}},
      {"max_document_words", {}},
      {"max_repairs", {}},
      {"output_dir", {}},
  };
  return keys;
}

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorKind::kConfig, msg); }

const json* find_key(const json& doc, const std::string& dotted) {
  const json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot - start);
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(part);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    if (dot == std::string::npos) return cur;
    start = dot + 1;
  }
}

std::string get_string(const json& doc, const std::string& key, std::string fallback) {
  const json* v = find_key(doc, key);
  if (v == nullptr) return fallback;
  if (!v->is_string()) fail(key + " must be a string");
  return v->get<std::string>();
}

bool get_bool(const json& doc, const std::string& key, bool fallback) {
  const json* v = find_key(doc, key);
  if (v == nullptr) return fallback;
  if (!v->is_boolean()) fail(key + " must be true or false");
  return v->get<bool>();
}

double get_number(const json& doc, const std::string& key, double fallback, double lo,
                  double hi) {
  const json* v = find_key(doc, key);
  if (v == nullptr) return fallback;
  if (!v->is_number()) fail(key + " must be a number");
  const double d = v->get<double>();
  if (!(d >= lo && d <= hi)) {
    fail(key + " = " + v->dump() + " is outside [" + json(lo).dump() + ", " + json(hi).dump() +
         "]");
  }
  return d;
}

std::uint64_t get_uint(const json& doc, const std::string& key, std::uint64_t fallback,
                       std::uint64_t lo, std::uint64_t hi) {
  const json* v = find_key(doc, key);
  if (v == nullptr) return fallback;
  if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
    fail(key + " must be a non-negative integer");
  }
  const auto n = v->get<std::uint64_t>();
  if (n < lo || n > hi) {
    fail(key + " = " + std::to_string(n) + " is outside [" + std::to_string(lo) + ", " +
         std::to_string(hi) + "]");
  }
  return n;
}

void check_known(const json& doc) {
  if (!doc.is_object()) fail("config must be a JSON object");
  for (const auto& [k, v] : doc.items()) {
    auto it = known_keys().find(k);
    if (it == known_keys().end()) {
      if (k == "api_key" || k.find("secret") != std::string::npos) {
        fail("secrets are not accepted in the config file; set client.api_key_env instead");
      }
      fail("unknown config key '" + k + "'");
    }
    if (it->second.empty()) continue;
    if (k == "grounding" && v.is_string()) continue;
    if (!v.is_object()) fail("config key '" + k + "' must be an object");
    for (const auto& [sub, unused] : v.items()) {
      if (sub == "api_key") {
        fail("secrets are not accepted in the config file; set client.api_key_env instead");
      }
      if (!it->second.contains(sub)) fail("unknown config key '" + k + "." + sub + "'");
    }
  }
}

void require_exists(const fs::path& p, const std::string& key) {
  std::error_code ec;
  if (!fs::exists(p, ec)) {
    throw Error(ErrorKind::kConfig, "path not found: " + p.string() + " (" + key + ")");
  }
}

}  // namespace

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kHttp:
      return "http";
    case BackendKind::kReplay:
      return "replay";
    case BackendKind::kRecord:
      return "record";
  }
  return "?";
}

ConfigDocument::ConfigDocument(json doc, fs::path base_dir)
    : doc_(std::move(doc)), base_dir_(std::move(base_dir)) {
  check_known(doc_);
}

ConfigDocument ConfigDocument::load(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    fail("config file not found: " + path.string());
  }
  fs::path base = fs::absolute(path).parent_path();
  try {
    return parse(text, base);
  } catch (const Error& e) {
    fail(path.string() + ": " + e.what());
  }
}

ConfigDocument ConfigDocument::parse(std::string_view text, const fs::path& base_dir) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) fail("config is not valid JSON");
  return ConfigDocument(std::move(doc), base_dir);
}

void ConfigDocument::set(const std::string& key, const std::string& value) {
  const std::size_t dot = key.find('.');
  const std::string head = key.substr(0, dot);
  auto known = known_keys().find(head);
  const bool ok = known != known_keys().end() &&
                  (dot == std::string::npos ? known->second.empty() || key == "grounding"
                                            : known->second.contains(key.substr(dot + 1)));
  if (!ok) fail("unknown config key '" + key + "'");

  json v;
  if (path_keys().contains(key)) {
    // Overrides come from the command line, so they resolve against the
    // working directory rather than the config file.
    v = fs::absolute(value).lexically_normal().string();
  } else if (string_keys().contains(key)) {
    v = value;
  } else {
    v = json::parse(value, nullptr, false);
    if (v.is_discarded() || v.is_structured()) fail("bad value '" + value + "' for " + key);
  }
  if (dot == std::string::npos) {
    doc_[key] = v;
  } else {
    json& parent = doc_[head];
    if (!parent.is_object()) parent = json::object();
    parent[key.substr(dot + 1)] = v;
  }
}

RunConfig ConfigDocument::resolve() const {
  check_known(doc_);
  RunConfig c;
  auto path_of = [&](const std::string& key, bool required) -> fs::path {
    const std::string s = get_string(doc_, key, "");
    if (s.empty()) {
      if (required) fail("missing required config key " + key);
      return {};
    }
    fs::path p(s);
    return (p.is_absolute() ? p : base_dir_ / p).lexically_normal();
  };

  c.corpus_path = path_of("corpus.path", true);
  try {
    c.corpus_format = parse_corpus_format(get_string(doc_, "corpus.format", "jsonl"));
  } catch (const Error& e) {
    fail(std::string("corpus.format: ") + e.what());
  }
  c.sample_size = get_uint(doc_, "sample.size", 0, 0, UINT32_MAX);
  c.seed = get_uint(doc_, "sample.seed", 0, 0, UINT64_MAX);
  for (Stage s : kAllStages) {
    c.templates[s] = path_of("templates." + std::string(to_string(s)), true);
  }

  const std::string backend = get_string(doc_, "client.backend", "replay");
  if (backend == "http") {
    c.backend = BackendKind::kHttp;
  } else if (backend == "replay") {
    c.backend = BackendKind::kReplay;
  } else if (backend == "record") {
    c.backend = BackendKind::kRecord;
  } else {
    fail("client.backend must be http, replay or record, not '" + backend + "'");
  }
  c.base_url = get_string(doc_, "client.base_url", c.base_url);
  c.params.model_name = get_string(doc_, "client.model", c.params.model_name);
  c.api_key_env = get_string(doc_, "client.api_key_env", c.api_key_env);
  c.cache_path = path_of("client.cache", c.backend != BackendKind::kHttp);
  c.params.temperature = get_number(doc_, "client.temperature", c.params.temperature, 0.0, 2.0);
  c.params.top_p = get_number(doc_, "client.top_p", c.params.top_p, 1e-9, 1.0);
  c.params.max_new_tokens = get_uint(doc_, "client.max_new_tokens", c.params.max_new_tokens, 1,
                                     1u << 20);
  c.parallelism = get_uint(doc_, "client.parallelism", c.parallelism, 1, 1024);
  c.max_attempts = static_cast<int>(get_uint(doc_, "client.max_attempts", 3, 1, 20));
  c.timeout_seconds = static_cast<int>(get_uint(doc_, "client.timeout_seconds", 300, 1, 86400));

  if (const json* g = find_key(doc_, "grounding"); g != nullptr && g->is_string()) {
    try {
      c.grounding = GroundingPolicy::parse(g->get<std::string>());
    } catch (const Error& e) {
      fail(std::string("grounding: ") + e.what());
    }
  } else {
    try {
      c.grounding = GroundingPolicy::parse(get_string(doc_, "grounding.mode", "normalized"));
    } catch (const Error& e) {
      fail(std::string("grounding.mode: ") + e.what());
    }
    if (c.grounding.mode == GroundingMode::kNormalized) {
      c.grounding.case_fold = get_bool(doc_, "grounding.case_fold", true);
      c.grounding.collapse_whitespace = get_bool(doc_, "grounding.collapse_whitespace", true);
    }
  }

  c.output_dir = path_of("output_dir", false);
  if (c.output_dir.empty()) c.output_dir = (base_dir_ / "out").lexically_normal();
  c.keep_empty = get_bool(doc_, "keep_empty", false);
  c.max_document_words = get_uint(doc_, "max_document_words", 4500, 0, UINT32_MAX);
  c.max_repairs = static_cast<int>(get_uint(doc_, "max_repairs", 2, 0, 10));
  return c;
}

void RunConfig::check_paths() const {
  require_exists(corpus_path, "corpus.path");
  for (const auto& [stage, path] : templates) {
    require_exists(path, "templates." + std::string(to_string(stage)));
  }
  if (backend == BackendKind::kReplay) require_exists(cache_path, "client.cache");
}

std::unique_ptr<ChatClient> make_client(const RunConfig& config) {
  std::shared_ptr<ChatBackend> backend;
  auto http = [&] {
    HttpOptions opts;
    opts.base_url = config.base_url;
    if (const char* key = std::getenv(config.api_key_env.c_str())) opts.api_key = key;
    opts.max_attempts = config.max_attempts;
    opts.timeout = std::chrono::seconds(config.timeout_seconds);
    return std::make_shared<HttpBackend>(opts);
  };
  switch (config.backend) {
    case BackendKind::kReplay:
      backend = std::make_shared<ReplayBackend>(std::make_shared<ReplayCache>(config.cache_path));
      break;
    case BackendKind::kRecord:
      backend = std::make_shared<RecordBackend>(http(),
                                                std::make_shared<ReplayCache>(config.cache_path));
      break;
    case BackendKind::kHttp:
      backend = http();
      break;
  }
  return std::make_unique<ChatClient>(std::move(backend), config.parallelism);
}

TemplateSet load_templates(const RunConfig& config) {
  TemplateSet set;
  for (const auto& [stage, path] : config.templates) {
    set.emplace(stage, PromptTemplate::load(path, stage));
  }
  return set;
}

}  // namespace guidegen

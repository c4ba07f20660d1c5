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


// Run configuration. The file is JSON; relative paths resolve against the
// directory holding it. Secrets are never read from the file: the API key
// comes from the environment variable named by client.api_key_env.
//
//   {
//     "corpus": {"path": "docs.jsonl", "format": "jsonl"},
//     "sample": {"size": 0, "seed": 0},
//     "templates": {"summarize": "...", "structure": "...",
//                   "guidelines": "...", "instances": "..."},
//     "client": {"backend": "replay", "cache": "cache.jsonl", ...},
//     "grounding": {"mode": "normalized", "case_fold": true,
//                   "collapse_whitespace": true},
//     "keep_empty": false,
//     "max_document_words": 4500,
//     "output_dir": "out"
//   }

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include <json.hpp>

#include "guidegen/corpus.hpp"
#include "guidegen/llm_client.hpp"
#include "guidegen/pipeline.hpp"
#include "guidegen/validator.hpp"

namespace guidegen {

enum class BackendKind { kHttp, kReplay, kRecord };

struct RunConfig {
  std::filesystem::path corpus_path;
  CorpusFormat corpus_format = CorpusFormat::kJsonl;
  std::size_t sample_size = 0;  // 0 takes the whole corpus in order
  std::uint64_t seed = 0;
  std::map<Stage, std::filesystem::path> templates;

  BackendKind backend = BackendKind::kReplay;
  std::string base_url = "http://localhost:8000";
  std::string api_key_env = "GUIDEGEN_API_KEY";
  std::filesystem::path cache_path;
  GenerationParams params;
  std::size_t parallelism = 32;
  int max_attempts = 3;
  int timeout_seconds = 300;

  GroundingPolicy grounding;
  std::filesystem::path output_dir = "out";
  bool keep_empty = false;
  std::size_t max_document_words = 4500;
  int max_repairs = 2;

  // Throws Error(kConfig) naming the first referenced path that is missing.
  void check_paths() const;
};

// The raw JSON document plus overrides, resolved into a RunConfig on demand.
class ConfigDocument {
 public:
  ConfigDocument() : doc_(nlohmann::json::object()) {}
  ConfigDocument(nlohmann::json doc, std::filesystem::path base_dir);

  static ConfigDocument load(const std::filesystem::path& path);
  static ConfigDocument parse(std::string_view text, const std::filesystem::path& base_dir);

  // Dotted key such as "client.temperature". Values are parsed as JSON
  // scalars except for keys that hold strings or paths.
  void set(const std::string& key, const std::string& value);

  // Type and range checks. Throws Error(kConfig).
  RunConfig resolve() const;

  const nlohmann::json& raw() const { return doc_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }

 private:
  nlohmann::json doc_;
  std::filesystem::path base_dir_;
};

std::string_view to_string(BackendKind kind);

// Builds the backend chain described by the config. Reads the API key from
// the environment for http and record backends.
std::unique_ptr<ChatClient> make_client(const RunConfig& config);

TemplateSet load_templates(const RunConfig& config);

}  // namespace guidegen

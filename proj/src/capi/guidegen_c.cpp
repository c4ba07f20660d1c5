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


#include "guidegen/guidegen.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "guidegen/commands.hpp"
#include "guidegen/config.hpp"
#include "guidegen/error.hpp"
#include "guidegen/notation.hpp"
#include "guidegen/validator.hpp"

struct gg_config {
  guidegen::ConfigDocument doc;
};

struct gg_schema {
  guidegen::Schema schema;
};

struct gg_instances {
  guidegen::InstanceSet set;
};

namespace {

thread_local std::string g_last_error;

gg_status status_of(guidegen::ErrorKind kind) {
  using guidegen::ErrorKind;
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return GG_ERR_INVALID_ARGUMENT;
    case ErrorKind::kNotFound:
      return GG_ERR_NOT_FOUND;
    case ErrorKind::kConfig:
      return GG_ERR_CONFIG;
    case ErrorKind::kParse:
      return GG_ERR_PARSE;
    case ErrorKind::kIo:
      return GG_ERR_IO;
    case ErrorKind::kTransport:
      return GG_ERR_TRANSPORT;
    case ErrorKind::kRuntime:
      return GG_ERR_RUNTIME;
  }
  return GG_ERR_RUNTIME;
}

template <typename Fn>
gg_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return GG_OK;
  } catch (const guidegen::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return GG_ERR_RUNTIME;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return GG_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GG_ERR_RUNTIME;
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) {
    throw guidegen::Error(guidegen::ErrorKind::kInvalidArgument,
                          std::string(name) + " must not be NULL");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void emit(const guidegen::CommandResult& r, char** out) { *out = dup_string(r.to_json().dump()); }

guidegen::GroundingPolicy policy_of(const char* name) {
  return name == nullptr ? guidegen::GroundingPolicy{} : guidegen::GroundingPolicy::parse(name);
}

}  // namespace

extern "C" {

const char* gg_version(void) { return "0.1.0"; }

const char* gg_status_name(gg_status status) {
  switch (status) {
    case GG_OK:
      return "ok";
    case GG_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case GG_ERR_NOT_FOUND:
      return "not_found";
    case GG_ERR_CONFIG:
      return "config";
    case GG_ERR_PARSE:
      return "parse";
    case GG_ERR_IO:
      return "io";
    case GG_ERR_TRANSPORT:
      return "transport";
    case GG_ERR_RUNTIME:
      return "runtime";
  }
  return "unknown";
}

const char* gg_last_error(void) { return g_last_error.c_str(); }

void gg_string_free(char* s) { std::free(s); }

gg_status gg_config_load(const char* path, gg_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new gg_config{guidegen::ConfigDocument::load(path)};
  });
}

gg_status gg_config_parse(const char* json_text, const char* base_dir, gg_config** out) {
  return guarded([&] {
    require(json_text, "json_text");
    require(out, "out");
    const std::filesystem::path base =
        base_dir == nullptr ? std::filesystem::current_path() : std::filesystem::path(base_dir);
    *out = new gg_config{guidegen::ConfigDocument::parse(json_text, base)};
  });
}

gg_status gg_config_set(gg_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->doc.set(key, value);
  });
}

gg_status gg_config_describe(const gg_config* config, char** out_json) {
  return guarded([&] {
    require(config, "config");
    require(out_json, "out_json");
    const guidegen::RunConfig c = config->doc.resolve();
    nlohmann::json templates = nlohmann::json::object();
    for (const auto& [stage, path] : c.templates) {
      templates[std::string(guidegen::to_string(stage))] = path.string();
    }
    const nlohmann::json j = {
        {"corpus", {{"path", c.corpus_path.string()},
                    {"format", c.corpus_format == guidegen::CorpusFormat::kJsonl
                                   ? "jsonl"
                                   : "text-directory"}}},
        {"sample", {{"size", c.sample_size}, {"seed", c.seed}}},
        {"templates", templates},
        {"client",
         {{"backend", std::string(guidegen::to_string(c.backend))},
          {"base_url", c.base_url},
          {"model", c.params.model_name},
          {"api_key_env", c.api_key_env},
          {"cache", c.cache_path.string()},
          {"temperature", c.params.temperature},
          {"top_p", c.params.top_p},
          {"max_new_tokens", c.params.max_new_tokens},
          {"parallelism", c.parallelism},
          {"max_attempts", c.max_attempts},
          {"timeout_seconds", c.timeout_seconds}}},
        {"grounding",
         {{"mode", c.grounding.name()},
          {"case_fold", c.grounding.case_fold},
          {"collapse_whitespace", c.grounding.collapse_whitespace}}},
        {"keep_empty", c.keep_empty},
        {"max_document_words", c.max_document_words},
        {"max_repairs", c.max_repairs},
        {"output_dir", c.output_dir.string()},
    };
    *out_json = dup_string(j.dump(2));
  });
}

void gg_config_free(gg_config* config) { delete config; }

gg_status gg_generate(const gg_config* config, int resume, char** out_json) {
  return guarded([&] {
    require(config, "config");
    require(out_json, "out_json");
    emit(guidegen::cmd_generate(config->doc.resolve(), resume != 0), out_json);
  });
}

gg_status gg_validate_dataset(const char* dataset_path, const char* grounding,
                              const char* out_dir, int keep_empty, char** out_json) {
  return guarded([&] {
    require(dataset_path, "dataset_path");
    require(out_dir, "out_dir");
    require(out_json, "out_json");
    emit(guidegen::cmd_validate(dataset_path, policy_of(grounding), out_dir, keep_empty != 0),
         out_json);
  });
}

gg_status gg_stats(const char* dataset_path, size_t top_k, char** out_json) {
  return guarded([&] {
    require(dataset_path, "dataset_path");
    require(out_json, "out_json");
    emit(guidegen::cmd_stats(dataset_path, top_k), out_json);
  });
}

gg_status gg_overlap(const char* dataset_path, const char* labels_dir, int case_insensitive,
                     char** out_json) {
  return guarded([&] {
    require(dataset_path, "dataset_path");
    require(labels_dir, "labels_dir");
    require(out_json, "out_json");
    emit(guidegen::cmd_overlap(dataset_path, labels_dir, case_insensitive != 0), out_json);
  });
}

gg_status gg_emit_train(const char* dataset_path, const char* out_file, const char* grounding,
                        char** out_json) {
  return guarded([&] {
    require(dataset_path, "dataset_path");
    require(out_file, "out_file");
    require(out_json, "out_json");
    emit(guidegen::cmd_emit_train(dataset_path, out_file, policy_of(grounding)), out_json);
  });
}

gg_status gg_eval(const char* gold_dir, const char* pred_dir, const char* match,
                  char** out_json) {
  return guarded([&] {
    require(gold_dir, "gold_dir");
    require(pred_dir, "pred_dir");
    require(out_json, "out_json");
    const auto mode =
        match == nullptr ? guidegen::MatchMode::kExact : guidegen::parse_match_mode(match);
    emit(guidegen::cmd_eval(gold_dir, pred_dir, mode), out_json);
  });
}

gg_status gg_schema_parse(const char* text, gg_schema** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new gg_schema{guidegen::parse_guidelines(text)};
  });
}

gg_status gg_schema_print(const gg_schema* schema, char** out_text) {
  return guarded([&] {
    require(schema, "schema");
    require(out_text, "out_text");
    *out_text = dup_string(guidegen::print_guidelines(schema->schema));
  });
}

size_t gg_schema_class_count(const gg_schema* schema) {
  return schema == nullptr ? 0 : schema->schema.classes.size();
}

void gg_schema_free(gg_schema* schema) { delete schema; }

gg_status gg_instances_parse(const char* text, gg_instances** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new gg_instances{guidegen::parse_instances(text)};
  });
}

gg_status gg_instances_print(const gg_instances* instances, char** out_text) {
  return guarded([&] {
    require(instances, "instances");
    require(out_text, "out_text");
    *out_text = dup_string(guidegen::print_instances(instances->set));
  });
}

size_t gg_instances_count(const gg_instances* instances) {
  return instances == nullptr ? 0 : instances->set.instances.size();
}

void gg_instances_free(gg_instances* instances) { delete instances; }

gg_status gg_validate_instances(const gg_instances* instances, const gg_schema* schema,
                                const char* doc_id, const char* text, const char* grounding,
                                char** out_json) {
  return guarded([&] {
    require(instances, "instances");
    require(schema, "schema");
    require(doc_id, "doc_id");
    require(text, "text");
    require(out_json, "out_json");
    guidegen::InstanceSet set = instances->set;
    set.doc_id = doc_id;
    const guidegen::Document doc = guidegen::Document::make(doc_id, text);
    const auto report = guidegen::validate(set, schema->schema, doc, policy_of(grounding));
    *out_json = dup_string(report.to_json().dump());
  });
}

}  // extern "C"

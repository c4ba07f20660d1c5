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

// Four-stage generation per document: summary, structured JSON record,
// code-style guidelines, instance list. Each stage is an independent
// single-turn prompt that carries the earlier outputs it needs explicitly.

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidegen/corpus.hpp"
#include "guidegen/dataset.hpp"
#include "guidegen/error.hpp"
#include "guidegen/llm_client.hpp"
#include "guidegen/notation.hpp"
#include "guidegen/validator.hpp"

namespace guidegen {

enum class Stage { kSummarize = 0, kStructure = 1, kGuidelines = 2, kInstances = 3 };

inline constexpr std::array<Stage, 4> kAllStages = {Stage::kSummarize, Stage::kStructure,
                                                    Stage::kGuidelines, Stage::kInstances};

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view name);

// Named slots a template may reference.
struct PromptVars {
  std::optional<std::string> document;
  std::optional<std::string> summary;
  std::optional<std::string> structured_json;
  std::optional<std::string> guidelines;
};

// Template text with {document}, {summary}, {structured_json} and
// {guidelines} placeholders. Each stage requires a fixed set, each exactly
// once, and may not reference outputs of later stages. Other braces are
// literal text.
//
// Template files may start with a front-matter block:
//   ---
//   stage: summarize
//   version: 1
//   ---
class PromptTemplate {
 public:
  PromptTemplate(Stage stage, std::string text, std::string version);

  static PromptTemplate parse(std::string_view file_text, std::optional<Stage> expected = {});
  static PromptTemplate load(const std::filesystem::path& path,
                             std::optional<Stage> expected = {});

  // Single pass: placeholder-like text inside substituted values is kept.
  std::string render(const PromptVars& vars) const;

  Stage stage() const { return stage_; }
  const std::string& text() const { return text_; }
  const std::string& version() const { return version_; }

 private:
  Stage stage_;
  std::string text_;
  std::string version_;
};

using TemplateSet = std::map<Stage, PromptTemplate>;

// One LLM call made by a stage, kept for audit.
struct StageRecord {
  std::string doc_id;
  Stage stage = Stage::kSummarize;
  std::string rendered_prompt;
  std::string raw_response;
  bool parsed_ok = false;
  int attempt = 1;
  std::string finish_reason;
  std::string error;

  nlohmann::json to_json() const;
};

class StageError : public Error {
 public:
  StageError(Stage stage, const std::string& what, bool retryable)
      : Error(ErrorKind::kRuntime, what), stage_(stage), retryable_(retryable) {}
  Stage stage() const { return stage_; }
  // True for transport failures and cache misses, which a rerun may fix.
  bool retryable() const { return retryable_; }

 private:
  Stage stage_;
  bool retryable_;
};

struct StageContext {
  const ChatClient& client;
  GenerationParams params;
  int max_repairs = 2;
  std::vector<StageRecord>* audit = nullptr;
};

struct GuidelineOutput {
  std::string text;  // raw response, verbatim
  Schema schema;
};

std::string stage_summarize(const Document& doc, const PromptTemplate& tmpl, StageContext& ctx);

StructuredRecord stage_structure(const Document& doc, const std::string& summary,
                                 const PromptTemplate& tmpl, StageContext& ctx);

GuidelineOutput stage_guidelines(const Document& doc, const std::string& summary,
                                 const StructuredRecord& record, const PromptTemplate& tmpl,
                                 StageContext& ctx);

InstanceSet stage_instances(const Document& doc, const StructuredRecord& record,
                            const GuidelineOutput& guidelines, const PromptTemplate& tmpl,
                            StageContext& ctx);

// Response parsers used by the stages; exposed for testing.
StructuredRecord parse_structured_record(std::string_view response, const std::string& doc_id);
Schema parse_guideline_response(std::string_view response);

// Keeps the first `max_words` words of the text (0 keeps everything).
// Returns true if anything was cut.
bool truncate_words(std::string& text, std::size_t max_words);

struct PipelineConfig {
  GroundingPolicy policy;
  bool keep_empty = false;
  std::size_t max_document_words = 0;
  int max_repairs = 2;
  bool record_timestamps = false;
  GenerationParams params;
};

struct RejectEntry {
  std::string doc_id;
  std::string stage;  // a Stage name, or "filter"
  std::string message;
  bool retryable = false;

  nlohmann::json to_json() const;
  static RejectEntry from_json(const nlohmann::json& j);
};

struct DocumentOutcome {
  std::size_t index = 0;  // position in the input sequence
  std::optional<DatasetRecord> record;
  std::optional<RejectEntry> reject;
  std::optional<ValidationReport> report;
  std::vector<StageRecord> audit;
};

struct PipelineResult {
  std::vector<DatasetRecord> records;
  std::vector<RejectEntry> rejects;
  std::vector<ValidationReport> reports;
  std::vector<StageRecord> audit;
};

// Called once per document, in input order, from one thread at a time.
using OutcomeSink = std::function<void(const DocumentOutcome&)>;

// Documents run concurrently up to the client's parallelism; stages within
// a document are sequential. A failing document becomes a reject entry and
// never aborts the run. Throws only if a template is missing.
PipelineResult run_pipeline(std::span<const Document> docs, const TemplateSet& templates,
                            const ChatClient& client, const PipelineConfig& config,
                            const OutcomeSink& sink = {});

}  // namespace guidegen

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


// Whole-workflow commands shared by the C API and the command-line tool.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidegen/config.hpp"
#include "guidegen/eval.hpp"
#include "guidegen/validator.hpp"

namespace guidegen {

struct CommandResult {
  nlohmann::json report = nlohmann::json::object();
  std::string table;  // human-readable rendering of `report`
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

// Output file names inside the run's output directory.
inline constexpr const char* kDatasetFile = "dataset.jsonl";
inline constexpr const char* kRejectsFile = "rejects.jsonl";
inline constexpr const char* kStagesFile = "stages.jsonl";
inline constexpr const char* kReportsFile = "reports.jsonl";
inline constexpr const char* kValidatedFile = "validated.jsonl";
inline constexpr const char* kValidationReportsFile = "validation_reports.jsonl";
inline constexpr const char* kTrainFile = "train.jsonl";

// Runs the pipeline over the configured sample. With `resume`, documents
// already in the dataset or rejected for a non-retryable reason are skipped.
// Report keys: documents, skipped, records_new, records_total, rejects_new,
// llm_calls. Warns when the dataset ends up empty.
CommandResult cmd_generate(const RunConfig& config, bool resume);

// Re-validates every record and writes validated.jsonl and
// validation_reports.jsonl to out_dir. Warns once per rejected instance.
CommandResult cmd_validate(const std::filesystem::path& dataset,
                           const GroundingPolicy& policy,
                           const std::filesystem::path& out_dir, bool keep_empty);

CommandResult cmd_stats(const std::filesystem::path& dataset, std::size_t top_k);

CommandResult cmd_overlap(const std::filesystem::path& dataset,
                          const std::filesystem::path& labels_dir, bool case_insensitive);

CommandResult cmd_emit_train(const std::filesystem::path& dataset,
                             const std::filesystem::path& out_file,
                             const GroundingPolicy& policy);

CommandResult cmd_eval(const std::filesystem::path& gold_dir,
                       const std::filesystem::path& pred_dir, MatchMode mode);

}  // namespace guidegen

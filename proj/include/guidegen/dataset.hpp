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

// The generated dataset: record store, label statistics, label-space overlap
// against benchmark inventories, and training-example emission.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "guidegen/notation.hpp"
#include "guidegen/validator.hpp"

namespace guidegen {

inline constexpr int kDatasetFormatVersion = 1;

using AttributeValue = std::variant<std::string, std::vector<std::string>>;

// Intermediate structured representation produced by the second stage.
struct StructuredEntry {
  std::string label;
  std::map<std::string, AttributeValue> attributes;

  friend bool operator==(const StructuredEntry&, const StructuredEntry&) = default;
};

struct StructuredRecord {
  std::string doc_id;
  std::vector<StructuredEntry> entries;

  friend bool operator==(const StructuredRecord&, const StructuredRecord&) = default;
};

struct RecordMetadata {
  std::map<std::string, std::string> template_versions;  // stage -> version
  std::string model_name;
  std::string created_at;  // ISO-8601 UTC; empty for replayed runs
  bool document_truncated = false;
  std::string grounding_policy;

  friend bool operator==(const RecordMetadata&, const RecordMetadata&) = default;
};

struct DatasetRecord {
  std::string doc_id;
  std::string text;
  std::string summary;
  StructuredRecord structured;
  std::string guidelines_text;
  Schema schema;
  InstanceSet instances;    // filtered, schema-compliant
  ValidationReport report;  // verdicts over the unfiltered instance list
  RecordMetadata metadata;
};

nlohmann::json to_json(const Schema& schema);
Schema schema_from_json(const nlohmann::json& j);
nlohmann::json to_json(const InstanceSet& set);
InstanceSet instances_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StructuredRecord& rec);
StructuredRecord structured_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetRecord& rec);
DatasetRecord record_from_json(const nlohmann::json& j);

bool same_structure(const DatasetRecord& a, const DatasetRecord& b);

struct LineWarning {
  std::size_t line = 0;
  std::string message;
};

struct DatasetReadResult {
  std::vector<DatasetRecord> records;
  std::vector<LineWarning> warnings;
};

// JSONL: a header line {"format": "guidegen.dataset", "version": N} followed
// by one record per line.
void write_dataset(const std::filesystem::path& path, std::span<const DatasetRecord> records);

// Strict mode throws on the first corrupt line; tolerant mode skips it and
// records a located warning. A header with another version always throws.
DatasetReadResult read_dataset(const std::filesystem::path& path, bool tolerant = false);

// Appends records to a dataset file, writing the header when the file is new.
class DatasetWriter {
 public:
  DatasetWriter(const std::filesystem::path& path, bool append);
  void write(const DatasetRecord& record);

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

struct LabelCount {
  std::string label;
  std::uint64_t annotations = 0;  // instances carrying the label
  std::uint64_t documents = 0;    // documents with at least one such instance

  friend bool operator==(const LabelCount&, const LabelCount&) = default;
};

// Averages are kept as exact ratios and only converted for display.
struct LabelStats {
  std::uint64_t n_docs = 0;
  std::uint64_t total_annotations = 0;
  std::uint64_t total_doc_labels = 0;  // sum over docs of distinct labels used
  std::map<std::string, LabelCount> label_frequency;

  std::size_t unique_label_count() const { return label_frequency.size(); }
  double avg_distinct_labels_per_doc() const;
  double avg_annotations_per_doc() const;

  // Most frequent by annotation count (ties by label), and least frequent.
  std::vector<LabelCount> top_k(std::size_t k) const;
  std::vector<LabelCount> bottom_k(std::size_t k) const;

  // Statistics of the concatenation of the two underlying datasets.
  static LabelStats merge(const LabelStats& a, const LabelStats& b);

  nlohmann::json to_json(std::size_t k) const;
  std::string to_table(std::size_t k) const;

  friend bool operator==(const LabelStats&, const LabelStats&) = default;
};

// Labels are instance class names; schema-only classes do not count.
LabelStats compute_stats(std::span<const DatasetRecord> records);

std::set<std::string> dataset_labels(std::span<const DatasetRecord> records);

struct OverlapResult {
  std::string benchmark;  // "ALL" for the union over benchmarks
  std::string split;
  std::size_t gold_label_count = 0;
  std::size_t matched_count = 0;
  double coverage = 0.0;
  std::vector<std::string> matched;
  std::vector<std::string> unmatched;
};

inline constexpr const char* kAggregateBenchmark = "ALL";

// benchmark -> split -> label set
using LabelSpaces = std::map<std::string, std::map<std::string, std::set<std::string>>>;

// Reads labels/<benchmark>.<split>.txt files, one label per line.
LabelSpaces load_label_spaces(const std::filesystem::path& dir);

// Labels are compared after trimming, case-sensitively unless
// `case_insensitive`. Emits one row per (benchmark, split) and one
// aggregate row per split.
std::vector<OverlapResult> compute_overlap(const std::set<std::string>& dataset_labels,
                                           const LabelSpaces& spaces,
                                           bool case_insensitive = false);

nlohmann::json overlap_to_json(std::span<const OverlapResult> rows);
std::string overlap_to_table(std::span<const OverlapResult> rows);

struct TrainingExample {
  std::string doc_id;
  std::string input;
  std::string target;
};

struct EmitResult {
  std::vector<TrainingExample> examples;
  std::vector<std::string> warnings;  // one per skipped record
};

// Prompt half of a training example: printed guidelines plus the text.
std::string render_training_input(const Schema& schema, std::string_view text);

// One example per record; records whose target does not re-parse and
// re-validate under `policy` are skipped with a warning.
EmitResult emit_training_examples(std::span<const DatasetRecord> records,
                                  const GroundingPolicy& policy);

void write_training_file(const std::filesystem::path& path,
                         std::span<const TrainingExample> examples);

}  // namespace guidegen

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

// Span-level NER scoring. Mentions are (label, surface text) pairs matched as
// multisets within each example: every gold mention can be consumed by at
// most one prediction.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace guidegen {

struct Mention {
  std::string label;
  std::string span;

  friend auto operator<=>(const Mention&, const Mention&) = default;
};

struct GoldExample {
  std::string example_id;
  std::string text;
  std::vector<Mention> mentions;
};

struct Prediction {
  std::string example_id;
  std::vector<Mention> mentions;
  bool parse_failed = false;  // unparseable output scores as no mentions
};

enum class MatchMode { kExact, kNormalized };

MatchMode parse_match_mode(std::string_view name);

// Ratios use 0/0 := 0.
struct Score {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  double precision() const;
  double recall() const;
  double f1() const;

  Score& operator+=(const Score& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const Score&, const Score&) = default;
};

struct EvalResult {
  Score total;
  std::map<std::string, Score> by_label;

  double precision() const { return total.precision(); }
  double recall() const { return total.recall(); }
  double f1() const { return total.f1(); }
};

// Predictions for unknown example ids and duplicate gold ids are errors;
// golds without a prediction are scored against no mentions.
EvalResult score(std::span<const GoldExample> golds, std::span<const Prediction> preds,
                 MatchMode mode = MatchMode::kExact);

struct Suite {
  std::vector<GoldExample> golds;
  std::vector<Prediction> preds;
};

struct BenchmarkReport {
  std::map<std::string, EvalResult> datasets;
  double average_f1 = 0.0;  // unweighted mean of per-dataset F1

  nlohmann::json to_json() const;
  // One column per dataset plus AVERAGE, F1 in percentage points.
  std::string to_table() const;
};

double macro_average(std::span<const double> values);

BenchmarkReport score_benchmarks(const std::map<std::string, Suite>& suites,
                                 MatchMode mode = MatchMode::kExact);

struct LabelRow {
  std::string label;
  Score score;
  bool absent = false;  // label occurs in neither golds nor predictions
};

// Per-label scores restricted to `labels`, in the order given.
std::vector<LabelRow> label_report(std::span<const GoldExample> golds,
                                   std::span<const Prediction> preds,
                                   std::span<const std::string> labels,
                                   MatchMode mode = MatchMode::kExact);

std::string label_report_table(std::span<const LabelRow> rows);

// class name -> field holding the mention text. Classes not listed use their
// first keyword argument.
using MentionFieldMap = std::map<std::string, std::string>;

// Flattens a raw code-style model output into mentions. Returns false and no
// mentions when the output does not parse.
bool mentions_from_output(std::string_view output, const MentionFieldMap& fields,
                          std::vector<Mention>& out);

// Gold JSONL: {"id", "text", "mentions": [{"label", "span"}]}.
std::vector<GoldExample> load_gold_file(const std::filesystem::path& path);

// Prediction JSONL: {"id", "output"} with raw model text, or {"id", "mentions"}.
std::vector<Prediction> load_prediction_file(const std::filesystem::path& path,
                                             const MentionFieldMap& fields = {});

struct EvalRun {
  BenchmarkReport report;
  std::vector<std::string> warnings;
};

// Scores every <name>.jsonl in gold_dir against pred_dir/<name>.jsonl. An
// optional gold_dir/<name>.fields.json maps classes to mention fields.
EvalRun evaluate_directories(const std::filesystem::path& gold_dir,
                             const std::filesystem::path& pred_dir,
                             MatchMode mode = MatchMode::kExact);

}  // namespace guidegen

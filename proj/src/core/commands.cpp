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


#include "guidegen/commands.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "guidegen/corpus.hpp"
#include "guidegen/dataset.hpp"
#include "guidegen/error.hpp"
#include "guidegen/pipeline.hpp"
#include "guidegen/text.hpp"

namespace guidegen {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class JsonlAppender {
 public:
  JsonlAppender(const fs::path& path, bool append) : path_(path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!out_) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  }
  void write(const json& j) {
    out_ << j.dump() << '\n' << std::flush;
    if (!out_) throw Error(ErrorKind::kIo, "error writing " + path_.string());
  }

 private:
  std::ofstream out_;
  fs::path path_;
};

std::vector<RejectEntry> read_rejects(const fs::path& path, std::vector<std::string>& warnings) {
  std::vector<RejectEntry> out;
  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(RejectEntry::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      warnings.push_back(path.string() + ":" + std::to_string(lineno) +
                         ": skipping unreadable reject entry");
    }
  }
  return out;
}

std::vector<DatasetRecord> load_records(const fs::path& dataset,
                                        std::vector<std::string>& warnings) {
  if (!fs::exists(dataset)) {
    throw Error(ErrorKind::kNotFound, "dataset not found: " + dataset.string());
  }
  DatasetReadResult r = read_dataset(dataset, true);
  for (const auto& w : r.warnings) {
    warnings.push_back(dataset.string() + ":" + std::to_string(w.line) + ": " + w.message);
  }
  return std::move(r.records);
}

}  // namespace

json CommandResult::to_json() const {
  return {{"report", report}, {"table", table}, {"warnings", warnings}};
}

CommandResult cmd_generate(const RunConfig& config, bool resume) {
  config.check_paths();
  CommandResult result;
  const TemplateSet templates = load_templates(config);
  std::vector<Document> corpus = load_corpus(config.corpus_path, config.corpus_format);
  std::vector<Document> docs =
      config.sample_size == 0 ? std::move(corpus)
                              : sample_corpus(corpus, config.sample_size, config.seed);

  const fs::path dataset_path = config.output_dir / kDatasetFile;
  const fs::path rejects_path = config.output_dir / kRejectsFile;
  fs::create_directories(config.output_dir);

  std::set<std::string> done;
  std::size_t records_before = 0;
  if (resume) {
    if (fs::exists(dataset_path)) {
      std::vector<DatasetRecord> existing = load_records(dataset_path, result.warnings);
      // Rewritten so a torn final line does not corrupt later appends.
      write_dataset(dataset_path, existing);
      for (const auto& r : existing) done.insert(r.doc_id);
      records_before = existing.size();
    }
    if (fs::exists(rejects_path)) {
      std::vector<RejectEntry> kept;
      for (auto& r : read_rejects(rejects_path, result.warnings)) {
        if (r.retryable) continue;
        done.insert(r.doc_id);
        kept.push_back(std::move(r));
      }
      JsonlAppender rewrite(rejects_path, false);
      for (const auto& r : kept) rewrite.write(r.to_json());
    }
  }

  std::vector<Document> pending;
  for (auto& d : docs) {
    if (!done.contains(d.doc_id)) pending.push_back(std::move(d));
  }
  const std::size_t skipped = docs.size() - pending.size();

  DatasetWriter dataset_out(dataset_path, resume);
  JsonlAppender rejects_out(rejects_path, resume);
  JsonlAppender stages_out(config.output_dir / kStagesFile, resume);
  JsonlAppender reports_out(config.output_dir / kReportsFile, resume);

  PipelineConfig pc;
  pc.policy = config.grounding;
  pc.keep_empty = config.keep_empty;
  pc.max_document_words = config.max_document_words;
  pc.max_repairs = config.max_repairs;
  pc.record_timestamps = config.backend != BackendKind::kReplay;
  pc.params = config.params;

  std::size_t records_new = 0;
  std::size_t rejects_new = 0;
  std::size_t calls = 0;
  std::vector<std::string> reject_lines;
  if (!pending.empty()) {
    const auto client = make_client(config);
    run_pipeline(pending, templates, *client, pc, [&](const DocumentOutcome& o) {
      for (const auto& s : o.audit) stages_out.write(s.to_json());
      calls += o.audit.size();
      if (o.report) reports_out.write(o.report->to_json());
      if (o.record) {
        dataset_out.write(*o.record);
        ++records_new;
      }
      if (o.reject) {
        rejects_out.write(o.reject->to_json());
        ++rejects_new;
        reject_lines.push_back(o.reject->doc_id + " rejected at " + o.reject->stage + ": " +
                               o.reject->message);
      }
    });
  }

  const std::size_t total = records_before + records_new;
  result.report = {{"documents", docs.size()},   {"skipped", skipped},
                   {"records_new", records_new}, {"records_total", total},
                   {"rejects_new", rejects_new}, {"llm_calls", calls},
                   {"output_dir", config.output_dir.string()}};
  std::ostringstream t;
  t << "documents: " << docs.size() << " (" << skipped << " already done)\n"
    << "records:   " << records_new << " new, " << total << " total\n"
    << "rejects:   " << rejects_new << "\n"
    << "llm calls: " << calls << "\n"
    << "output:    " << config.output_dir.string() << "\n";
  for (const auto& l : reject_lines) t << "  " << l << "\n";
  result.table = t.str();
  if (total == 0) result.warnings.push_back("no dataset records were produced");
  return result;
}

CommandResult cmd_validate(const fs::path& dataset, const GroundingPolicy& policy,
                           const fs::path& out_dir, bool keep_empty) {
  CommandResult result;
  std::vector<DatasetRecord> records = load_records(dataset, result.warnings);

  std::vector<DatasetRecord> kept;
  std::map<std::string, std::size_t> by_code;
  std::size_t instances = 0;
  std::size_t rejected = 0;
  std::size_t dropped = 0;
  fs::create_directories(out_dir);
  JsonlAppender reports_out(out_dir / kValidationReportsFile, false);
  for (auto& rec : records) {
    const Document doc = Document::make(rec.doc_id, rec.text);
    InstanceSet set = rec.instances;
    set.doc_id = rec.doc_id;
    ValidationReport report = validate(set, rec.schema, doc, policy);
    reports_out.write(report.to_json());
    instances += set.instances.size();
    rejected += report.rejected_count;
    for (const auto& v : report.verdicts) {
      if (v.status != Verdict::kRejected) continue;
      std::string codes;
      for (const auto& e : v.errors) {
        ++by_code[std::string(to_string(e.code))];
        if (!codes.empty()) codes += ", ";
        codes += std::string(to_string(e.code)) + " (" + e.message + ")";
      }
      result.warnings.push_back(rec.doc_id + " instance " + std::to_string(v.index) + ": " +
                                codes);
    }
    InstanceSet filtered = filter(set, report);
    if (filtered.instances.empty() && !keep_empty) {
      ++dropped;
      continue;
    }
    rec.instances = std::move(filtered);
    rec.report = std::move(report);
    rec.metadata.grounding_policy = policy.name();
    kept.push_back(std::move(rec));
  }
  write_dataset(out_dir / kValidatedFile, kept);

  json codes = json::object();
  for (ErrorCode c : kAllErrorCodes) {
    const std::string name(to_string(c));
    codes[name] = by_code.contains(name) ? by_code[name] : 0;
  }
  result.report = {{"records", records.size()},
                   {"records_kept", kept.size()},
                   {"records_dropped", dropped},
                   {"instances", instances},
                   {"instances_rejected", rejected},
                   {"errors", codes},
                   {"grounding", policy.name()}};
  std::ostringstream t;
  t << "records:   " << records.size() << " (" << kept.size() << " kept, " << dropped
    << " dropped)\n"
    << "instances: " << instances << " (" << rejected << " rejected)\n";
  for (const auto& [name, n] : codes.items()) {
    if (n.get<std::size_t>() > 0) t << "  " << name << ": " << n.get<std::size_t>() << "\n";
  }
  result.table = t.str();
  return result;
}

CommandResult cmd_stats(const fs::path& dataset, std::size_t top_k) {
  CommandResult result;
  const std::vector<DatasetRecord> records = load_records(dataset, result.warnings);
  const LabelStats stats = compute_stats(records);
  result.report = stats.to_json(top_k);
  result.table = stats.to_table(top_k);
  return result;
}

CommandResult cmd_overlap(const fs::path& dataset, const fs::path& labels_dir,
                          bool case_insensitive) {
  CommandResult result;
  const std::vector<DatasetRecord> records = load_records(dataset, result.warnings);
  if (!fs::is_directory(labels_dir)) {
    throw Error(ErrorKind::kNotFound, "label directory not found: " + labels_dir.string());
  }
  const auto rows =
      compute_overlap(dataset_labels(records), load_label_spaces(labels_dir), case_insensitive);
  result.report = overlap_to_json(rows);
  result.table = overlap_to_table(rows);
  return result;
}

CommandResult cmd_emit_train(const fs::path& dataset, const fs::path& out_file,
                             const GroundingPolicy& policy) {
  CommandResult result;
  const std::vector<DatasetRecord> records = load_records(dataset, result.warnings);
  EmitResult emitted = emit_training_examples(records, policy);
  write_training_file(out_file, emitted.examples);
  result.warnings.insert(result.warnings.end(), emitted.warnings.begin(),
                         emitted.warnings.end());
  result.report = {{"records", records.size()},
                   {"examples", emitted.examples.size()},
                   {"skipped", emitted.warnings.size()},
                   {"output", out_file.string()}};
  result.table = "examples: " + std::to_string(emitted.examples.size()) + " of " +
                 std::to_string(records.size()) + " records\noutput:   " + out_file.string() +
                 "\n";
  return result;
}

CommandResult cmd_eval(const fs::path& gold_dir, const fs::path& pred_dir, MatchMode mode) {
  for (const auto& d : {gold_dir, pred_dir}) {
    if (!fs::is_directory(d)) {
      throw Error(ErrorKind::kNotFound, "directory not found: " + d.string());
    }
  }
  CommandResult result;
  EvalRun run = evaluate_directories(gold_dir, pred_dir, mode);
  result.report = run.report.to_json();
  result.table = run.report.to_table();
  result.warnings = std::move(run.warnings);
  return result;
}

}  // namespace guidegen

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

#include "guidegen/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "guidegen/error.hpp"
#include "guidegen/text.hpp"

namespace guidegen {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kDatasetFormat = "guidegen.dataset";

json value_to_json(const std::variant<std::string, std::vector<std::string>>& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<std::vector<std::string>>(v);
}

std::variant<std::string, std::vector<std::string>> value_from_json(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) return j.get<std::vector<std::string>>();
  throw Error(ErrorKind::kParse, "value must be a string or a list of strings");
}

json header_json() { return {{"format", kDatasetFormat}, {"version", kDatasetFormatVersion}}; }

void check_header(const std::string& line, const fs::path& path) {
  json h;
  try {
    h = json::parse(line);
  } catch (const json::parse_error&) {
    throw Error(ErrorKind::kParse, path.string() + ":1: missing dataset header");
  }
  if (!h.is_object() || h.value("format", std::string()) != kDatasetFormat) {
    throw Error(ErrorKind::kParse, path.string() + ":1: missing dataset header");
  }
  const int version = h.value("version", -1);
  if (version != kDatasetFormatVersion) {
    throw Error(ErrorKind::kParse, path.string() + ": dataset format version " +
                                       std::to_string(version) + " is not supported (expected " +
                                       std::to_string(kDatasetFormatVersion) + ")");
  }
}

std::string percent(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", ratio * 100.0);
  return buf;
}

}  // namespace

json to_json(const Schema& schema) {
  json classes = json::array();
  for (const auto& c : schema.classes) {
    json fields = json::array();
    for (const auto& f : c.fields) {
      fields.push_back({{"name", f.name},
                        {"kind", f.kind == FieldKind::kText ? "text" : "text_list"},
                        {"comment", f.comment},
                        {"required", f.required}});
    }
    classes.push_back({{"name", c.name}, {"guideline", c.guideline}, {"fields", fields}});
  }
  return {{"classes", classes}};
}

Schema schema_from_json(const json& j) {
  Schema s;
  for (const auto& c : j.at("classes")) {
    EntityClass cls;
    cls.name = c.at("name").get<std::string>();
    cls.guideline = c.at("guideline").get<std::string>();
    for (const auto& f : c.at("fields")) {
      FieldDef fd;
      fd.name = f.at("name").get<std::string>();
      const std::string kind = f.at("kind").get<std::string>();
      if (kind == "text") {
        fd.kind = FieldKind::kText;
      } else if (kind == "text_list") {
        fd.kind = FieldKind::kTextList;
      } else {
        throw Error(ErrorKind::kParse, "unknown field kind '" + kind + "'");
      }
      fd.comment = f.at("comment").get<std::string>();
      fd.required = f.at("required").get<bool>();
      cls.fields.push_back(std::move(fd));
    }
    s.classes.push_back(std::move(cls));
  }
  return s;
}

json to_json(const InstanceSet& set) {
  json items = json::array();
  for (const auto& inst : set.instances) {
    json args = json::array();
    for (const auto& a : inst.assignments) {
      args.push_back({{"field", a.field}, {"value", value_to_json(a.value)}});
    }
    items.push_back({{"class", inst.class_name}, {"args", args}, {"offset", inst.source_offset}});
  }
  return {{"doc_id", set.doc_id}, {"instances", items}, {"source", set.source_text}};
}

InstanceSet instances_from_json(const json& j) {
  InstanceSet set;
  set.doc_id = j.at("doc_id").get<std::string>();
  set.source_text = j.value("source", std::string());
  for (const auto& item : j.at("instances")) {
    EntityInstance inst;
    inst.class_name = item.at("class").get<std::string>();
    inst.source_offset = item.value("offset", std::size_t{0});
    for (const auto& a : item.at("args")) {
      inst.assignments.push_back(
          {a.at("field").get<std::string>(), value_from_json(a.at("value"))});
    }
    set.instances.push_back(std::move(inst));
  }
  return set;
}

json to_json(const StructuredRecord& rec) {
  json entries = json::array();
  for (const auto& e : rec.entries) {
    json attrs = json::object();
    for (const auto& [k, v] : e.attributes) attrs[k] = value_to_json(v);
    entries.push_back({{"label", e.label}, {"attributes", attrs}});
  }
  return {{"doc_id", rec.doc_id}, {"entries", entries}};
}

StructuredRecord structured_from_json(const json& j) {
  StructuredRecord rec;
  rec.doc_id = j.at("doc_id").get<std::string>();
  for (const auto& e : j.at("entries")) {
    StructuredEntry entry;
    entry.label = e.at("label").get<std::string>();
    for (const auto& [k, v] : e.at("attributes").items()) {
      entry.attributes[k] = value_from_json(v);
    }
    rec.entries.push_back(std::move(entry));
  }
  return rec;
}

json to_json(const DatasetRecord& rec) {
  const auto& m = rec.metadata;
  return {{"doc_id", rec.doc_id},
          {"text", rec.text},
          {"summary", rec.summary},
          {"structured", to_json(rec.structured)},
          {"guidelines", rec.guidelines_text},
          {"schema", to_json(rec.schema)},
          {"instances", to_json(rec.instances)},
          {"validation", rec.report.to_json()},
          {"metadata",
           {{"template_versions", m.template_versions},
            {"model", m.model_name},
            {"created_at", m.created_at},
            {"document_truncated", m.document_truncated},
            {"grounding_policy", m.grounding_policy}}}};
}

DatasetRecord record_from_json(const json& j) {
  DatasetRecord r;
  r.doc_id = j.at("doc_id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  r.summary = j.at("summary").get<std::string>();
  r.structured = structured_from_json(j.at("structured"));
  r.guidelines_text = j.at("guidelines").get<std::string>();
  r.schema = schema_from_json(j.at("schema"));
  r.schema.source_text = r.guidelines_text;
  r.instances = instances_from_json(j.at("instances"));
  r.report = ValidationReport::from_json(j.at("validation"));
  const json& m = j.at("metadata");
  r.metadata.template_versions =
      m.at("template_versions").get<std::map<std::string, std::string>>();
  r.metadata.model_name = m.at("model").get<std::string>();
  r.metadata.created_at = m.at("created_at").get<std::string>();
  r.metadata.document_truncated = m.at("document_truncated").get<bool>();
  r.metadata.grounding_policy = m.at("grounding_policy").get<std::string>();
  if (r.instances.doc_id != r.doc_id) {
    throw Error(ErrorKind::kParse, "record '" + r.doc_id + "' holds instances for '" +
                                       r.instances.doc_id + "'");
  }
  return r;
}

bool same_structure(const DatasetRecord& a, const DatasetRecord& b) {
  return a.doc_id == b.doc_id && a.text == b.text && a.summary == b.summary &&
         a.structured == b.structured && a.guidelines_text == b.guidelines_text &&
         same_structure(a.schema, b.schema) && same_structure(a.instances, b.instances) &&
         a.report.to_json() == b.report.to_json() && a.metadata == b.metadata;
}

// ---------------------------------------------------------------------------

void write_dataset(const fs::path& path, std::span<const DatasetRecord> records) {
  std::string out = header_json().dump() + "\n";
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  write_file(path, out);
}

DatasetReadResult read_dataset(const fs::path& path, bool tolerant) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open dataset " + path.string());
  DatasetReadResult result;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::kParse, path.string() + ": empty file, missing dataset header");
  }
  check_header(line, path);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      result.records.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      const std::string msg = std::string("corrupt record: ") + e.what();
      if (!tolerant) {
        throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(lineno) + ": " + msg);
      }
      result.warnings.push_back({lineno, msg});
    }
  }
  return result;
}

DatasetWriter::DatasetWriter(const fs::path& path, bool append) : path_(path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const bool fresh = !append || !fs::exists(path) || fs::file_size(path) == 0;
  out_.open(path, std::ios::binary | (fresh ? std::ios::trunc : std::ios::app));
  if (!out_) throw Error(ErrorKind::kIo, "cannot write dataset " + path.string());
  if (fresh) out_ << header_json().dump() << '\n' << std::flush;
}

void DatasetWriter::write(const DatasetRecord& record) {
  out_ << to_json(record).dump() << '\n' << std::flush;
  if (!out_) throw Error(ErrorKind::kIo, "error writing dataset " + path_.string());
}

// ---------------------------------------------------------------------------

double LabelStats::avg_distinct_labels_per_doc() const {
  return n_docs == 0 ? 0.0 : static_cast<double>(total_doc_labels) / static_cast<double>(n_docs);
}

double LabelStats::avg_annotations_per_doc() const {
  return n_docs == 0 ? 0.0
                     : static_cast<double>(total_annotations) / static_cast<double>(n_docs);
}

std::vector<LabelCount> LabelStats::top_k(std::size_t k) const {
  std::vector<LabelCount> v;
  for (const auto& [_, c] : label_frequency) v.push_back(c);
  std::stable_sort(v.begin(), v.end(), [](const LabelCount& a, const LabelCount& b) {
    return a.annotations > b.annotations;
  });
  if (v.size() > k) v.resize(k);
  return v;
}

std::vector<LabelCount> LabelStats::bottom_k(std::size_t k) const {
  std::vector<LabelCount> v;
  for (const auto& [_, c] : label_frequency) v.push_back(c);
  std::stable_sort(v.begin(), v.end(), [](const LabelCount& a, const LabelCount& b) {
    return a.annotations < b.annotations;
  });
  if (v.size() > k) v.resize(k);
  return v;
}

LabelStats LabelStats::merge(const LabelStats& a, const LabelStats& b) {
  LabelStats out = a;
  out.n_docs += b.n_docs;
  out.total_annotations += b.total_annotations;
  out.total_doc_labels += b.total_doc_labels;
  for (const auto& [label, c] : b.label_frequency) {
    auto& dst = out.label_frequency[label];
    dst.label = label;
    dst.annotations += c.annotations;
    dst.documents += c.documents;
  }
  return out;
}

json LabelStats::to_json(std::size_t k) const {
  auto rows = [](const std::vector<LabelCount>& v) {
    json arr = json::array();
    for (const auto& c : v) {
      arr.push_back({{"label", c.label}, {"annotations", c.annotations}, {"documents", c.documents}});
    }
    return arr;
  };
  return {{"documents", n_docs},
          {"unique_labels", unique_label_count()},
          {"total_annotations", total_annotations},
          {"avg_distinct_labels_per_doc", avg_distinct_labels_per_doc()},
          {"avg_annotations_per_doc", avg_annotations_per_doc()},
          {"top", rows(top_k(k))},
          {"bottom", rows(bottom_k(k))}};
}

std::string LabelStats::to_table(std::size_t k) const {
  std::ostringstream os;
  char buf[160];
  os << "documents                     " << n_docs << "\n";
  os << "unique labels                 " << unique_label_count() << "\n";
  os << "annotations                   " << total_annotations << "\n";
  std::snprintf(buf, sizeof(buf), "distinct labels per document  %.2f\n",
                avg_distinct_labels_per_doc());
  os << buf;
  std::snprintf(buf, sizeof(buf), "annotations per document      %.2f\n",
                avg_annotations_per_doc());
  os << buf << "\n";
  const auto top = top_k(k);
  const auto bottom = bottom_k(k);
  std::snprintf(buf, sizeof(buf), "%8s  %-28s | %8s  %-28s\n", "Freq.", "Most common", "Freq.",
                "Least common");
  os << buf;
  for (std::size_t i = 0; i < std::max(top.size(), bottom.size()); ++i) {
    std::string l = i < top.size() ? std::to_string(top[i].annotations) : "";
    std::string ln = i < top.size() ? top[i].label : "";
    std::string r = i < bottom.size() ? std::to_string(bottom[i].annotations) : "";
    std::string rn = i < bottom.size() ? bottom[i].label : "";
    std::snprintf(buf, sizeof(buf), "%8s  %-28s | %8s  %-28s\n", l.c_str(), ln.c_str(),
                  r.c_str(), rn.c_str());
    os << buf;
  }
  return os.str();
}

LabelStats compute_stats(std::span<const DatasetRecord> records) {
  LabelStats s;
  for (const auto& rec : records) {
    ++s.n_docs;
    std::set<std::string> used;
    for (const auto& inst : rec.instances.instances) {
      ++s.total_annotations;
      auto& c = s.label_frequency[inst.class_name];
      c.label = inst.class_name;
      ++c.annotations;
      if (used.insert(inst.class_name).second) ++c.documents;
    }
    s.total_doc_labels += used.size();
  }
  return s;
}

std::set<std::string> dataset_labels(std::span<const DatasetRecord> records) {
  std::set<std::string> out;
  for (const auto& rec : records) {
    for (const auto& inst : rec.instances.instances) out.insert(inst.class_name);
  }
  return out;
}

// ---------------------------------------------------------------------------

LabelSpaces load_label_spaces(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorKind::kNotFound, "label space directory not found: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename().string()[0] != '.') {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  LabelSpaces spaces;
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    std::string benchmark, split;
    for (const char* s : {"train", "test"}) {
      const std::string suffix = std::string(".") + s + ".txt";
      if (name.size() > suffix.size() && name.ends_with(suffix)) {
        benchmark = name.substr(0, name.size() - suffix.size());
        split = s;
      }
    }
    if (split.empty()) {
      throw Error(ErrorKind::kParse, "unknown benchmark file format: " + f.string() +
                                         " (expected <benchmark>.<train|test>.txt)");
    }
    std::istringstream in(read_file(f));
    auto& labels = spaces[benchmark][split];
    for (std::string line; std::getline(in, line);) {
      const std::string_view t = trim(line);
      if (!t.empty()) labels.insert(std::string(t));
    }
  }
  return spaces;
}

std::vector<OverlapResult> compute_overlap(const std::set<std::string>& dataset_labels,
                                           const LabelSpaces& spaces, bool case_insensitive) {
  if (dataset_labels.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "dataset label set is empty");
  }
  auto canon = [&](std::string_view s) {
    return normalize_text(trim(s), case_insensitive, false);
  };
  std::set<std::string> have;
  for (const auto& l : dataset_labels) have.insert(canon(l));

  auto score = [&](const std::string& bench, const std::string& split,
                   const std::set<std::string>& gold) {
    OverlapResult r;
    r.benchmark = bench;
    r.split = split;
    r.gold_label_count = gold.size();
    for (const auto& g : gold) {
      (have.count(g) ? r.matched : r.unmatched).push_back(g);
    }
    r.matched_count = r.matched.size();
    r.coverage = static_cast<double>(r.matched_count) / static_cast<double>(r.gold_label_count);
    return r;
  };

  std::vector<OverlapResult> rows;
  std::map<std::string, std::set<std::string>> union_by_split;
  for (const auto& [bench, splits] : spaces) {
    for (const auto& [split, labels] : splits) {
      if (labels.empty()) {
        throw Error(ErrorKind::kInvalidArgument,
                    "label space " + bench + "." + split + " is empty");
      }
      std::set<std::string> gold;
      for (const auto& l : labels) gold.insert(canon(l));
      union_by_split[split].insert(gold.begin(), gold.end());
      rows.push_back(score(bench, split, gold));
    }
  }
  for (const auto& [split, gold] : union_by_split) {
    rows.push_back(score(kAggregateBenchmark, split, gold));
  }
  return rows;
}

json overlap_to_json(std::span<const OverlapResult> rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"benchmark", r.benchmark},
                   {"split", r.split},
                   {"gold_labels", r.gold_label_count},
                   {"matched", r.matched_count},
                   {"coverage", r.coverage},
                   {"matched_labels", r.matched},
                   {"unmatched_labels", r.unmatched}});
  }
  return arr;
}

std::string overlap_to_table(std::span<const OverlapResult> rows) {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-24s %-6s %8s %8s %9s\n", "benchmark", "split", "gold",
                "matched", "coverage");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-24s %-6s %8zu %8zu %9s\n", r.benchmark.c_str(),
                  r.split.c_str(), r.gold_label_count, r.matched_count,
                  percent(r.coverage).c_str());
    os << buf;
  }
  return os.str();
}

// ---------------------------------------------------------------------------

std::string render_training_input(const Schema& schema, std::string_view text) {
  std::string out = "# Entity definitions\n\n";
  out += print_guidelines(schema);
  out += "\n# Text to annotate\ntext = ";
  out += quote_string(text);
  out += "\n\n# Instances of the classes above found in the text\nresult = ";
  return out;
}

EmitResult emit_training_examples(std::span<const DatasetRecord> records,
                                  const GroundingPolicy& policy) {
  EmitResult result;
  for (const auto& rec : records) {
    try {
      std::string target = print_instances(rec.instances);
      InstanceSet reparsed = parse_instances(target);
      reparsed.doc_id = rec.doc_id;
      const Document doc = Document::make(rec.doc_id, rec.text);
      const ValidationReport report = validate(reparsed, rec.schema, doc, policy);
      if (report.rejected_count > 0) {
        result.warnings.push_back("skipping '" + rec.doc_id + "': " +
                                  std::to_string(report.rejected_count) +
                                  " instance(s) fail re-validation");
        continue;
      }
      result.examples.push_back(
          {rec.doc_id, render_training_input(rec.schema, rec.text), std::move(target)});
    } catch (const std::exception& e) {
      result.warnings.push_back("skipping '" + rec.doc_id + "': " + e.what());
    }
  }
  return result;
}

void write_training_file(const fs::path& path, std::span<const TrainingExample> examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += json{{"id", ex.doc_id}, {"input", ex.input}, {"target", ex.target}}.dump() + "\n";
  }
  write_file(path, out);
}

}  // namespace guidegen

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


#include "guidegen/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <mutex>
#include <set>
#include <sstream>
#include <utility>

#include "guidegen/text.hpp"

namespace guidegen {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kStageNames = {"summarize", "structure", "guidelines",
                                                         "instances"};

enum class Slot { kDocument, kSummary, kStructured, kGuidelines };

struct SlotName {
  Slot slot;
  std::string_view token;
};

constexpr std::array<SlotName, 4> kSlots = {{
    {Slot::kDocument, "{document}"},
    {Slot::kSummary, "{summary}"},
    {Slot::kStructured, "{structured_json}"},
    {Slot::kGuidelines, "{guidelines}"},
}};

std::set<Slot> required_slots(Stage stage) {
  switch (stage) {
    case Stage::kSummarize:
      return {Slot::kDocument};
    case Stage::kStructure:
      return {Slot::kDocument, Slot::kSummary};
    case Stage::kGuidelines:
      return {Slot::kDocument, Slot::kSummary, Slot::kStructured};
    case Stage::kInstances:
      return {Slot::kDocument, Slot::kStructured, Slot::kGuidelines};
  }
  return {};
}

const std::optional<std::string>& slot_value(const PromptVars& vars, Slot slot) {
  switch (slot) {
    case Slot::kDocument:
      return vars.document;
    case Slot::kSummary:
      return vars.summary;
    case Slot::kStructured:
      return vars.structured_json;
    case Slot::kGuidelines:
      return vars.guidelines;
  }
  return vars.document;
}

// Position of the next placeholder token at or after `pos`.
std::pair<std::size_t, const SlotName*> next_slot(std::string_view text, std::size_t pos) {
  std::size_t best = std::string_view::npos;
  const SlotName* which = nullptr;
  for (const auto& s : kSlots) {
    const std::size_t at = text.find(s.token, pos);
    if (at < best) {
      best = at;
      which = &s;
    }
  }
  return {best, which};
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string attribute_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::optional<AttributeValue> attribute_value(const json& v) {
  if (v.is_null()) return std::nullopt;
  if (v.is_array()) {
    std::vector<std::string> items;
    for (const auto& e : v) {
      if (!e.is_null()) items.push_back(attribute_string(e));
    }
    return items;
  }
  return attribute_string(v);
}

constexpr std::array<std::string_view, 5> kLabelKeys = {"label", "type", "entity_type", "entity",
                                                        "class"};

std::optional<StructuredEntry> entry_from_object(const json& obj, const std::string* label_hint) {
  if (!obj.is_object()) return std::nullopt;
  StructuredEntry entry;
  std::string label_key;
  for (auto key : kLabelKeys) {
    auto it = obj.find(std::string(key));
    if (it != obj.end() && it->is_string()) {
      entry.label = it->get<std::string>();
      label_key = key;
      break;
    }
  }
  if (entry.label.empty() && label_hint != nullptr) entry.label = *label_hint;
  if (entry.label.empty()) return std::nullopt;
  const json* attrs = &obj;
  if (auto it = obj.find("attributes"); it != obj.end() && it->is_object()) attrs = &*it;
  for (const auto& [k, v] : attrs->items()) {
    if (attrs == &obj && k == label_key) continue;
    if (auto value = attribute_value(v)) entry.attributes[k] = std::move(*value);
  }
  return entry;
}

void collect_entries(const json& j, std::vector<StructuredEntry>& out) {
  if (j.is_array()) {
    for (const auto& e : j) {
      if (auto entry = entry_from_object(e, nullptr)) out.push_back(std::move(*entry));
    }
    return;
  }
  if (!j.is_object()) return;
  for (auto key : {"entities", "entries", "records", "items"}) {
    if (auto it = j.find(key); it != j.end() && it->is_array()) {
      collect_entries(*it, out);
      return;
    }
  }
  if (auto entry = entry_from_object(j, nullptr)) {
    out.push_back(std::move(*entry));
    return;
  }
  // {"Label": [{...}, ...], "Other": {...}}
  for (const auto& [label, v] : j.items()) {
    if (v.is_array()) {
      for (const auto& e : v) {
        if (auto entry = entry_from_object(e, &label)) out.push_back(std::move(*entry));
      }
    } else if (auto entry = entry_from_object(v, &label)) {
      out.push_back(std::move(*entry));
    }
  }
}

std::optional<json> parse_json_loose(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (!j.is_discarded()) return j;
  const std::size_t open = text.find_first_of("{[");
  if (open == std::string_view::npos) return std::nullopt;
  const char close_ch = text[open] == '{' ? '}' : ']';
  const std::size_t close = text.rfind(close_ch);
  if (close == std::string_view::npos || close <= open) return std::nullopt;
  j = json::parse(text.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

// Body of the first fenced block if the text contains one.
std::string extract_code(std::string_view text) {
  const std::size_t open = text.find("```");
  if (open == std::string_view::npos) return std::string(trim(text));
  return strip_code_fences(text.substr(open));
}

std::string repair_note(const std::string& problem) {
  return "\n\nYour previous answer could not be used: " + problem +
         "\nAnswer again and follow the required output format exactly.";
}

template <typename Parse>
auto run_stage(Stage stage, const std::string& doc_id, const std::string& prompt,
               StageContext& ctx, Parse&& parse) -> decltype(parse(std::string_view{})) {
  std::string current = prompt;
  std::string problem;
  const int attempts = 1 + std::max(0, ctx.max_repairs);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    StageRecord rec;
    rec.doc_id = doc_id;
    rec.stage = stage;
    rec.rendered_prompt = current;
    rec.attempt = attempt;
    ChatResponse resp;
    try {
      resp = ctx.client.complete(ChatRequest::user(current, ctx.params));
    } catch (const Error& e) {
      rec.finish_reason = std::string(to_string(FinishReason::kError));
      rec.error = e.what();
      if (ctx.audit != nullptr) ctx.audit->push_back(std::move(rec));
      const bool retryable = e.kind() == ErrorKind::kTransport || e.kind() == ErrorKind::kNotFound;
      throw StageError(stage, e.what(), retryable);
    }
    rec.raw_response = resp.text;
    rec.finish_reason = std::string(to_string(resp.finish_reason));
    if (resp.finish_reason == FinishReason::kError) {
      problem = "the endpoint reported an error";
    } else if (resp.truncated()) {
      problem = "the answer was cut off at the token limit; answer more briefly";
    } else if (trim(resp.text).empty()) {
      problem = "the answer was empty";
    } else {
      try {
        auto value = parse(std::string_view(resp.text));
        rec.parsed_ok = true;
        if (ctx.audit != nullptr) ctx.audit->push_back(std::move(rec));
        return value;
      } catch (const Error& e) {
        problem = e.what();
      }
    }
    rec.error = problem;
    if (ctx.audit != nullptr) ctx.audit->push_back(std::move(rec));
    current = prompt + repair_note(problem);
  }
  throw StageError(stage,
                   "no usable answer after " + std::to_string(attempts) + " attempts: " + problem,
                   false);
}

}  // namespace

std::string_view to_string(Stage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

Stage stage_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown stage '" + std::string(name) + "'");
}

PromptTemplate::PromptTemplate(Stage stage, std::string text, std::string version)
    : stage_(stage), text_(std::move(text)), version_(std::move(version)) {
  const std::set<Slot> required = required_slots(stage);
  std::map<Slot, int> seen;
  for (auto [pos, which] = next_slot(text_, 0); which != nullptr;
       std::tie(pos, which) = next_slot(text_, pos + which->token.size())) {
    if (!required.contains(which->slot)) {
      throw Error(ErrorKind::kConfig, std::string(to_string(stage)) + " template may not use " +
                                          std::string(which->token));
    }
    ++seen[which->slot];
  }
  for (const auto& s : kSlots) {
    if (!required.contains(s.slot)) continue;
    const int n = seen[s.slot];
    if (n != 1) {
      throw Error(ErrorKind::kConfig, std::string(to_string(stage)) + " template must use " +
                                          std::string(s.token) + " exactly once (found " +
                                          std::to_string(n) + ")");
    }
  }
  if (version_.empty()) throw Error(ErrorKind::kConfig, "template version is empty");
}

PromptTemplate PromptTemplate::parse(std::string_view file_text, std::optional<Stage> expected) {
  std::optional<Stage> stage;
  std::string version = "0";
  std::string_view body = file_text;
  if (body.starts_with("---\n")) {
    const std::size_t end = body.find("\n---\n", 3);
    if (end == std::string_view::npos) {
      throw Error(ErrorKind::kConfig, "unterminated template front matter");
    }
    std::istringstream header(std::string(body.substr(4, end - 3)));
    body = body.substr(end + 5);
    std::string line;
    while (std::getline(header, line)) {
      if (trim(line).empty()) continue;
      const std::size_t colon = line.find(':');
      if (colon == std::string::npos) {
        throw Error(ErrorKind::kConfig, "bad front matter line '" + line + "'");
      }
      const std::string key(trim(std::string_view(line).substr(0, colon)));
      const std::string value(trim(std::string_view(line).substr(colon + 1)));
      if (key == "stage") {
        stage = stage_from_string(value);
      } else if (key == "version") {
        version = value;
      } else {
        throw Error(ErrorKind::kConfig, "unknown front matter key '" + key + "'");
      }
    }
  }
  if (!stage && !expected) throw Error(ErrorKind::kConfig, "template does not declare a stage");
  if (stage && expected && *stage != *expected) {
    throw Error(ErrorKind::kConfig, "template is for stage " + std::string(to_string(*stage)) +
                                        ", expected " + std::string(to_string(*expected)));
  }
  return PromptTemplate(stage ? *stage : *expected, std::string(body), version);
}

PromptTemplate PromptTemplate::load(const fs::path& path, std::optional<Stage> expected) {
  try {
    return parse(read_file(path), expected);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kNotFound) throw;
    throw Error(ErrorKind::kConfig, path.string() + ": " + e.what());
  }
}

std::string PromptTemplate::render(const PromptVars& vars) const {
  std::string out;
  std::size_t pos = 0;
  for (auto [at, which] = next_slot(text_, 0); which != nullptr;
       std::tie(at, which) = next_slot(text_, pos)) {
    const auto& value = slot_value(vars, which->slot);
    if (!value) {
      throw Error(ErrorKind::kInvalidArgument,
                  "no value bound for " + std::string(which->token));
    }
    out.append(text_, pos, at - pos);
    out += *value;
    pos = at + which->token.size();
  }
  out.append(text_, pos);
  return out;
}

json StageRecord::to_json() const {
  return {{"doc_id", doc_id},
          {"stage", std::string(guidegen::to_string(stage))},
          {"attempt", attempt},
          {"parsed_ok", parsed_ok},
          {"finish_reason", finish_reason},
          {"error", error},
          {"rendered_prompt", rendered_prompt},
          {"raw_response", raw_response}};
}

json RejectEntry::to_json() const {
  return {{"doc_id", doc_id}, {"stage", stage}, {"message", message}, {"retryable", retryable}};
}

RejectEntry RejectEntry::from_json(const json& j) {
  RejectEntry r;
  r.doc_id = j.at("doc_id").get<std::string>();
  r.stage = j.at("stage").get<std::string>();
  r.message = j.value("message", "");
  r.retryable = j.value("retryable", false);
  return r;
}

StructuredRecord parse_structured_record(std::string_view response, const std::string& doc_id) {
  const std::string body = extract_code(response);
  auto j = parse_json_loose(body);
  if (!j) throw Error(ErrorKind::kParse, "the answer is not valid JSON");
  StructuredRecord rec;
  rec.doc_id = doc_id;
  collect_entries(*j, rec.entries);
  if (rec.entries.empty()) {
    throw Error(ErrorKind::kParse, "the JSON holds no entity records with a label");
  }
  return rec;
}

Schema parse_guideline_response(std::string_view response) {
  Schema schema = parse_guidelines(extract_code(response));
  for (const auto& cls : schema.classes) {
    for (const auto& f : cls.fields) {
      if (trim(f.comment).empty()) {
        throw Error(ErrorKind::kParse, "field '" + f.name + "' of class '" + cls.name +
                                           "' has no explanatory comment");
      }
    }
  }
  return schema;
}

bool truncate_words(std::string& text, std::size_t max_words) {
  if (max_words == 0) return false;
  const auto words = split_words(text);
  if (words.size() <= max_words) return false;
  const std::string_view last = words[max_words - 1];
  text.resize(static_cast<std::size_t>(last.data() - text.data()) + last.size());
  return true;
}

std::string stage_summarize(const Document& doc, const PromptTemplate& tmpl, StageContext& ctx) {
  PromptVars vars;
  vars.document = doc.text;
  return run_stage(Stage::kSummarize, doc.doc_id, tmpl.render(vars), ctx,
                   [](std::string_view r) { return std::string(trim(r)); });
}

StructuredRecord stage_structure(const Document& doc, const std::string& summary,
                                 const PromptTemplate& tmpl, StageContext& ctx) {
  PromptVars vars;
  vars.document = doc.text;
  vars.summary = summary;
  return run_stage(Stage::kStructure, doc.doc_id, tmpl.render(vars), ctx,
                   [&](std::string_view r) { return parse_structured_record(r, doc.doc_id); });
}

GuidelineOutput stage_guidelines(const Document& doc, const std::string& summary,
                                 const StructuredRecord& record, const PromptTemplate& tmpl,
                                 StageContext& ctx) {
  PromptVars vars;
  vars.document = doc.text;
  vars.summary = summary;
  vars.structured_json = to_json(record).at("entries").dump(2);
  return run_stage(Stage::kGuidelines, doc.doc_id, tmpl.render(vars), ctx,
                   [](std::string_view r) {
                     return GuidelineOutput{std::string(r), parse_guideline_response(r)};
                   });
}

InstanceSet stage_instances(const Document& doc, const StructuredRecord& record,
                            const GuidelineOutput& guidelines, const PromptTemplate& tmpl,
                            StageContext& ctx) {
  PromptVars vars;
  vars.document = doc.text;
  vars.structured_json = to_json(record).at("entries").dump(2);
  vars.guidelines = print_guidelines(guidelines.schema);
  return run_stage(Stage::kInstances, doc.doc_id, tmpl.render(vars), ctx,
                   [&](std::string_view r) {
                     InstanceSet set = parse_instances(r);
                     set.doc_id = doc.doc_id;
                     return set;
                   });
}

namespace {

DocumentOutcome process_document(std::size_t index, const Document& doc,
                                 const TemplateSet& templates, const ChatClient& client,
                                 const PipelineConfig& config) {
  DocumentOutcome out;
  out.index = index;
  StageContext ctx{client, config.params, config.max_repairs, &out.audit};

  Document prompt_doc = doc;
  const bool truncated = truncate_words(prompt_doc.text, config.max_document_words);
  Stage current = Stage::kSummarize;
  try {
    const std::string summary = stage_summarize(prompt_doc, templates.at(current), ctx);
    current = Stage::kStructure;
    StructuredRecord structured = stage_structure(prompt_doc, summary, templates.at(current), ctx);
    current = Stage::kGuidelines;
    GuidelineOutput guidelines =
        stage_guidelines(prompt_doc, summary, structured, templates.at(current), ctx);
    current = Stage::kInstances;
    InstanceSet raw = stage_instances(prompt_doc, structured, guidelines, templates.at(current), ctx);

    ValidationReport report = validate(raw, guidelines.schema, doc, config.policy);
    InstanceSet kept = filter(raw, report);
    out.report = report;
    if (kept.instances.empty() && !config.keep_empty) {
      out.reject = RejectEntry{doc.doc_id, "filter",
                               raw.instances.empty()
                                   ? "the instance list is empty"
                                   : "all " + std::to_string(raw.instances.size()) +
                                         " instances failed validation",
                               false};
      return out;
    }
    DatasetRecord rec;
    rec.doc_id = doc.doc_id;
    rec.text = doc.text;
    rec.summary = summary;
    rec.structured = std::move(structured);
    rec.guidelines_text = std::move(guidelines.text);
    rec.schema = std::move(guidelines.schema);
    rec.instances = std::move(kept);
    rec.report = std::move(report);
    for (const auto& [stage, tmpl] : templates) {
      rec.metadata.template_versions[std::string(to_string(stage))] = tmpl.version();
    }
    rec.metadata.model_name = config.params.model_name;
    if (config.record_timestamps) rec.metadata.created_at = utc_now();
    rec.metadata.document_truncated = truncated;
    rec.metadata.grounding_policy = config.policy.name();
    out.record = std::move(rec);
  } catch (const StageError& e) {
    out.reject = RejectEntry{doc.doc_id, std::string(to_string(e.stage())), e.what(),
                             e.retryable()};
  } catch (const std::exception& e) {
    out.reject = RejectEntry{doc.doc_id, std::string(to_string(current)), e.what(), false};
  }
  return out;
}

}  // namespace

PipelineResult run_pipeline(std::span<const Document> docs, const TemplateSet& templates,
                            const ChatClient& client, const PipelineConfig& config,
                            const OutcomeSink& sink) {
  for (Stage s : kAllStages) {
    if (!templates.contains(s)) {
      throw Error(ErrorKind::kConfig, "missing template for stage " + std::string(to_string(s)));
    }
  }
  PipelineResult result;
  std::vector<std::optional<DocumentOutcome>> slots(docs.size());
  std::mutex mu;
  std::size_t next_commit = 0;

  auto commit = [&](const DocumentOutcome& o) {
    if (sink) sink(o);
    if (o.record) result.records.push_back(*o.record);
    if (o.reject) result.rejects.push_back(*o.reject);
    if (o.report) result.reports.push_back(*o.report);
    result.audit.insert(result.audit.end(), o.audit.begin(), o.audit.end());
  };

  parallel_for(docs.size(), client.parallelism(), [&](std::size_t i) {
    DocumentOutcome o = process_document(i, docs[i], templates, client, config);
    std::lock_guard lock(mu);
    slots[i] = std::move(o);
    while (next_commit < slots.size() && slots[next_commit]) {
      commit(*slots[next_commit]);
      slots[next_commit].reset();
      ++next_commit;
    }
  });
  return result;
}

}  // namespace guidegen

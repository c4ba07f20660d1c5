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


#include <doctest.h>

#include <atomic>
#include <deque>
#include <fstream>
#include <mutex>

#include "guidegen/config.hpp"
#include "guidegen/corpus.hpp"
#include "guidegen/pipeline.hpp"
#include "guidegen/text.hpp"
#include "testing.hpp"

using namespace guidegen;
using json = nlohmann::json;

namespace {

TemplateSet tiny_templates() {
  TemplateSet t;
  t.emplace(Stage::kSummarize, PromptTemplate(Stage::kSummarize, "S|{document}", "t1"));
  t.emplace(Stage::kStructure,
            PromptTemplate(Stage::kStructure, "T|{document}|{summary}", "t1"));
  t.emplace(Stage::kGuidelines,
            PromptTemplate(Stage::kGuidelines, "G|{document}|{summary}|{structured_json}", "t1"));
  t.emplace(Stage::kInstances,
            PromptTemplate(Stage::kInstances, "I|{document}|{structured_json}|{guidelines}", "t1"));
  return t;
}

const char* kSummary = "- TensorFlow is developed by Google.";
const char* kStructure = R"({"entities": [{"label": "Framework", "attributes": {"name": "TensorFlow", "developer": "Google"}}]})";
const char* kGuidelines =
    "@dataclass\nclass Framework:\n    \"\"\"A machine learning framework.\"\"\"\n"
    "    name: str  # the framework name\n    developer: str  # who builds it\n";
const char* kInstances = R"([Framework(name="TensorFlow", developer="Google")])";

// Answers each stage from a queue; the last answer repeats.
class Script {
 public:
  Script() {
    answers_['S'] = {kSummary};
    answers_['T'] = {kStructure};
    answers_['G'] = {kGuidelines};
    answers_['I'] = {kInstances};
  }
  void set(char stage, std::deque<std::string> answers) { answers_[stage] = std::move(answers); }

  std::shared_ptr<ChatBackend> backend() {
    return std::make_shared<FunctionBackend>([this](const ChatRequest& r) {
      std::lock_guard lock(mu_);
      const std::string& prompt = r.messages().back().content;
      prompts.push_back(prompt);
      auto& q = answers_.at(prompt.at(0));
      std::string text = q.front();
      if (q.size() > 1) q.pop_front();
      return ChatResponse{text, FinishReason::kStop, std::nullopt};
    });
  }

  std::vector<std::string> prompts;

 private:
  std::mutex mu_;
  std::map<char, std::deque<std::string>> answers_;
};

Document doc() {
  return Document::make("d1", "TensorFlow is a framework developed by Google for deep learning.");
}

struct E2e {
  RunConfig config;
  std::vector<Document> docs;
  TemplateSet templates;
  PipelineConfig pc;
};

E2e load_e2e() {
  E2e e;
  e.config = ConfigDocument::load(ggtest::fixture("e2e/config.json")).resolve();
  e.docs = load_corpus(e.config.corpus_path, e.config.corpus_format);
  e.templates = load_templates(e.config);
  e.pc.policy = e.config.grounding;
  e.pc.max_document_words = e.config.max_document_words;
  e.pc.params = e.config.params;
  return e;
}

std::shared_ptr<ReplayCache> cache_without(const std::filesystem::path& src,
                                           const std::filesystem::path& dst,
                                           const std::string& key) {
  std::ifstream in(src);
  std::ofstream out(dst);
  for (std::string line; std::getline(in, line);) {
    if (json::parse(line).at("request_key") != key) out << line << '\n';
  }
  out.close();
  return std::make_shared<ReplayCache>(dst);
}

std::string dump_all(const PipelineResult& r) {
  std::string s;
  for (const auto& rec : r.records) s += to_json(rec).dump() + "\n";
  for (const auto& rej : r.rejects) s += rej.to_json().dump() + "\n";
  for (const auto& a : r.audit) s += a.to_json().dump() + "\n";
  return s;
}

}  // namespace

TEST_CASE("stage names round trip") {
  for (Stage s : kAllStages) CHECK(stage_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(stage_from_string("extract"), Error);
}

TEST_CASE("template placeholder contract") {
  CHECK_NOTHROW(PromptTemplate(Stage::kSummarize, "Summarize:\n{document}", "1"));
  // Missing a required slot.
  CHECK_THROWS_AS(PromptTemplate(Stage::kStructure, "{document}", "1"), Error);
  // Required slot twice.
  CHECK_THROWS_AS(PromptTemplate(Stage::kSummarize, "{document} {document}", "1"), Error);
  // A later stage's output.
  CHECK_THROWS_AS(PromptTemplate(Stage::kSummarize, "{document} {guidelines}", "1"), Error);
  CHECK_THROWS_AS(PromptTemplate(Stage::kStructure, "{document} {summary} {structured_json}", "1"),
                  Error);
  // Instances do not see the summary.
  CHECK_THROWS_AS(PromptTemplate(Stage::kInstances,
                                 "{document} {summary} {structured_json} {guidelines}", "1"),
                  Error);
  CHECK_THROWS_AS(PromptTemplate(Stage::kSummarize, "{document}", ""), Error);
  // Literal braces are plain text.
  const PromptTemplate t(Stage::kSummarize, "Return {\"k\": 1} for {document}.", "1");
  PromptVars v;
  v.document = "X";
  CHECK(t.render(v) == "Return {\"k\": 1} for X.");
}

TEST_CASE("render is single pass and placeholder free") {
  const PromptTemplate t(Stage::kStructure, "Doc: {document}\nSum: {summary}\n", "1");
  PromptVars v;
  v.document = "literal {summary} inside";
  v.summary = "S";
  CHECK(t.render(v) == "Doc: literal {summary} inside\nSum: S\n");
  PromptVars partial;
  partial.document = "x";
  CHECK_THROWS_AS(t.render(partial), Error);

  for (const auto& [stage, tmpl] : tiny_templates()) {
    PromptVars all{"a", "b", "c", "d"};
    const std::string out = tmpl.render(all);
    for (const char* slot : {"{document}", "{summary}", "{structured_json}", "{guidelines}"}) {
      CHECK(out.find(slot) == std::string::npos);
    }
  }
}

TEST_CASE("template front matter") {
  const auto t = PromptTemplate::parse("---\nstage: summarize\nversion: 7\n---\nSay {document}\n");
  CHECK(t.stage() == Stage::kSummarize);
  CHECK(t.version() == "7");
  CHECK(t.text() == "Say {document}\n");
  CHECK_THROWS_AS(PromptTemplate::parse("---\nstage: summarize\nversion: 7\n---\nSay {document}",
                                        Stage::kStructure),
                  Error);
  CHECK_THROWS_AS(PromptTemplate::parse("---\nstage: summarize\n"), Error);
  CHECK_THROWS_AS(PromptTemplate::parse("---\ncolor: red\n---\n{document}", Stage::kSummarize),
                  Error);
  for (Stage s : kAllStages) {
    const auto path = ggtest::source_root() / "templates" / (std::string(to_string(s)) + ".txt");
    CHECK(PromptTemplate::load(path, s).stage() == s);
  }
}

TEST_CASE("structured record parsing") {
  const std::string inner = kStructure;
  const auto plain = parse_structured_record(inner, "d");
  REQUIRE(plain.entries.size() == 1);
  CHECK(plain.entries[0].label == "Framework");
  CHECK(std::get<std::string>(plain.entries[0].attributes.at("developer")) == "Google");

  SUBCASE("code fences are stripped") {
    CHECK(parse_structured_record("Here it is:\n```json\n" + inner + "\n```\nDone.", "d") == plain);
    CHECK(parse_structured_record("```\n" + inner + "\n```", "d") == plain);
  }
  SUBCASE("bare array and label-keyed object") {
    const auto arr = parse_structured_record(
        R"([{"type": "Framework", "name": "TensorFlow", "developer": "Google"}])", "d");
    REQUIRE(arr.entries.size() == 1);
    CHECK(arr.entries[0].label == "Framework");
    const auto keyed =
        parse_structured_record(R"({"Framework": [{"name": "TensorFlow"}, {"name": "JAX"}]})", "d");
    CHECK(keyed.entries.size() == 2);
  }
  SUBCASE("failures") {
    CHECK_THROWS_AS(parse_structured_record("not json at all", "d"), Error);
    CHECK_THROWS_AS(parse_structured_record("[]", "d"), Error);
    CHECK_THROWS_AS(parse_structured_record("{}", "d"), Error);
  }
}

TEST_CASE("guideline response parsing") {
  const Schema s = parse_guideline_response(std::string("```python\n") + kGuidelines + "```");
  REQUIRE(s.classes.size() == 1);
  CHECK(s.classes[0].name == "Framework");
  CHECK_FALSE(s.classes[0].guideline.empty());
  for (const auto& f : s.classes[0].fields) CHECK_FALSE(f.comment.empty());

  try {
    parse_guideline_response("@dataclass\nclass Empty:\n    \"\"\"Nothing.\"\"\"\n");
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("empty class") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_guideline_response(std::string(kGuidelines) + "\n" + kGuidelines), Error);
  CHECK_THROWS_AS(parse_guideline_response(
                      "@dataclass\nclass A:\n    \"\"\"Doc.\"\"\"\n    name: str\n"),
                  Error);
  CHECK_THROWS_AS(parse_guideline_response("no classes here"), Error);
}

TEST_CASE("truncate_words") {
  std::string t = "one two  three\nfour";
  CHECK_FALSE(truncate_words(t, 0));
  CHECK_FALSE(truncate_words(t, 4));
  CHECK(truncate_words(t, 2));
  CHECK(t == "one two");
}

TEST_CASE("stages thread outputs into later prompts") {
  Script script;
  ChatClient client(script.backend(), 1);
  std::vector<StageRecord> audit;
  StageContext ctx{client, {}, 2, &audit};
  const auto t = tiny_templates();
  const Document d = doc();

  const std::string summary = stage_summarize(d, t.at(Stage::kSummarize), ctx);
  CHECK(summary == kSummary);
  const StructuredRecord rec = stage_structure(d, summary, t.at(Stage::kStructure), ctx);
  CHECK(rec.doc_id == "d1");
  const GuidelineOutput g = stage_guidelines(d, summary, rec, t.at(Stage::kGuidelines), ctx);
  CHECK(g.text == kGuidelines);
  const InstanceSet set = stage_instances(d, rec, g, t.at(Stage::kInstances), ctx);
  CHECK(set.doc_id == "d1");
  REQUIRE(set.instances.size() == 1);
  CHECK(set.instances[0].class_name == "Framework");

  REQUIRE(script.prompts.size() == 4);
  CHECK(script.prompts[1] == "T|" + d.text + "|" + summary);
  CHECK(script.prompts[2].find("\"TensorFlow\"") != std::string::npos);
  CHECK(script.prompts[3].find("class Framework:") != std::string::npos);
  CHECK(script.prompts[3].find(summary) == std::string::npos);
  REQUIRE(audit.size() == 4);
  for (const auto& a : audit) {
    CHECK(a.parsed_ok);
    CHECK(a.attempt == 1);
  }
}

TEST_CASE("repair loop") {
  const auto t = tiny_templates();
  const Document d = doc();

  SUBCASE("invalid JSON three times is a stage error") {
    Script script;
    script.set('T', {"not json at all"});
    ChatClient client(script.backend(), 1);
    std::vector<StageRecord> audit;
    StageContext ctx{client, {}, 2, &audit};
    try {
      stage_structure(d, kSummary, t.at(Stage::kStructure), ctx);
      FAIL("expected stage error");
    } catch (const StageError& e) {
      CHECK(e.stage() == Stage::kStructure);
      CHECK_FALSE(e.retryable());
    }
    REQUIRE(audit.size() == 3);
    for (int i = 0; i < 3; ++i) {
      CHECK(audit[i].attempt == i + 1);
      CHECK_FALSE(audit[i].parsed_ok);
      CHECK(audit[i].raw_response == "not json at all");
    }
    CHECK(audit[1].rendered_prompt.find("Your previous answer could not be used: ") !=
          std::string::npos);
    CHECK(audit[1].rendered_prompt.rfind(audit[0].rendered_prompt, 0) == 0);
  }
  SUBCASE("a repaired answer succeeds") {
    Script script;
    script.set('T', {"oops", kStructure});
    ChatClient client(script.backend(), 1);
    std::vector<StageRecord> audit;
    StageContext ctx{client, {}, 2, &audit};
    CHECK(stage_structure(d, kSummary, t.at(Stage::kStructure), ctx).entries.size() == 1);
    REQUIRE(audit.size() == 2);
    CHECK(audit[1].parsed_ok);
    CHECK(audit[1].attempt == 2);
  }
  SUBCASE("empty summary is rejected") {
    Script script;
    script.set('S', {""});
    ChatClient client(script.backend(), 1);
    StageContext ctx{client, {}, 2, nullptr};
    CHECK_THROWS_AS(stage_summarize(d, t.at(Stage::kSummarize), ctx), StageError);
  }
  SUBCASE("no repairs when disabled") {
    Script script;
    script.set('S', {" \n "});
    ChatClient client(script.backend(), 1);
    std::vector<StageRecord> audit;
    StageContext ctx{client, {}, 0, &audit};
    CHECK_THROWS_AS(stage_summarize(d, t.at(Stage::kSummarize), ctx), StageError);
    CHECK(audit.size() == 1);
  }
  SUBCASE("truncated answers are re-asked") {
    int calls = 0;
    ChatClient client(std::make_shared<FunctionBackend>([&](const ChatRequest&) {
                        ++calls;
                        return ChatResponse{kSummary, calls < 3 ? FinishReason::kLength
                                                                : FinishReason::kStop,
                                            std::nullopt};
                      }),
                      1);
    std::vector<StageRecord> audit;
    StageContext ctx{client, {}, 2, &audit};
    CHECK(stage_summarize(d, t.at(Stage::kSummarize), ctx) == kSummary);
    REQUIRE(audit.size() == 3);
    CHECK(audit[0].finish_reason == "length");
  }
}

TEST_CASE("instance stage output handling") {
  const auto t = tiny_templates();
  const Document d = doc();
  Script script;
  ChatClient client(script.backend(), 1);
  StageContext ctx{client, {}, 2, nullptr};
  const StructuredRecord rec = parse_structured_record(kStructure, "d1");
  const GuidelineOutput g{kGuidelines, parse_guideline_response(kGuidelines)};

  SUBCASE("empty list") {
    script.set('I', {"[]"});
    CHECK(stage_instances(d, rec, g, t.at(Stage::kInstances), ctx).instances.empty());
  }
  SUBCASE("surrounding commentary") {
    script.set('I', {std::string("Here are the instances:\n") + kInstances +
                     "\nThese cover every framework in the text."});
    CHECK(stage_instances(d, rec, g, t.at(Stage::kInstances), ctx).instances.size() == 1);
  }
  SUBCASE("no list literal") {
    script.set('I', {"There are no entities."});
    CHECK_THROWS_AS(stage_instances(d, rec, g, t.at(Stage::kInstances), ctx), StageError);
  }
}

TEST_CASE("pipeline over scripted documents") {
  const auto t = tiny_templates();
  PipelineConfig pc;

  SUBCASE("empty corpus") {
    Script script;
    ChatClient client(script.backend(), 2);
    const auto r = run_pipeline({}, t, client, pc);
    CHECK(r.records.empty());
    CHECK(r.rejects.empty());
    CHECK(script.prompts.empty());
  }
  SUBCASE("missing template") {
    Script script;
    ChatClient client(script.backend(), 2);
    TemplateSet partial = t;
    partial.erase(Stage::kGuidelines);
    const std::vector<Document> docs = {doc()};
    CHECK_THROWS_AS(run_pipeline(docs, partial, client, pc), Error);
  }
  SUBCASE("vacuous output is dropped unless kept") {
    Script script;
    script.set('I', {"[]"});
    ChatClient client(script.backend(), 2);
    const std::vector<Document> docs = {doc()};
    auto r = run_pipeline(docs, t, client, pc);
    CHECK(r.records.empty());
    REQUIRE(r.rejects.size() == 1);
    CHECK(r.rejects[0].stage == "filter");
    pc.keep_empty = true;
    r = run_pipeline(docs, t, client, pc);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].instances.instances.empty());
  }
  SUBCASE("ungrounded instances are filtered") {
    Script script;
    script.set('I', {R"([Framework(name="TensorFlow", developer="Google"), Framework(name="MXNet", developer="Apache")])"});
    ChatClient client(script.backend(), 2);
    const std::vector<Document> docs = {doc()};
    const auto r = run_pipeline(docs, t, client, pc);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].instances.instances.size() == 1);
    CHECK(r.records[0].report.rejected_count == 1);
    CHECK(r.records[0].metadata.template_versions.at("instances") == "t1");
    CHECK(r.records[0].metadata.created_at.empty());
  }
  SUBCASE("long documents are truncated for prompting only") {
    Script script;
    ChatClient client(script.backend(), 1);
    pc.max_document_words = 3;
    const std::vector<Document> docs = {doc()};
    const auto r = run_pipeline(docs, t, client, pc);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].metadata.document_truncated);
    CHECK(r.records[0].text == doc().text);
    CHECK(script.prompts[0] == "S|TensorFlow is a");
  }
  SUBCASE("outcomes reach the sink in input order") {
    Script script;
    ChatClient client(script.backend(), 4);
    std::vector<Document> docs;
    for (int i = 0; i < 12; ++i) {
      docs.push_back(Document::make("d" + std::to_string(i), doc().text));
    }
    std::vector<std::size_t> order;
    const auto r = run_pipeline(docs, t, client, pc,
                                [&](const DocumentOutcome& o) { order.push_back(o.index); });
    CHECK(r.records.size() == 12);
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i] == i);
    CHECK(order.size() == 12);
  }
}

TEST_CASE("end-to-end replay fixture") {
  E2e e = load_e2e();
  REQUIRE(e.docs.size() == 5);
  auto cache = std::make_shared<ReplayCache>(e.config.cache_path);
  std::atomic<int> calls{0};
  auto replay = std::make_shared<ReplayBackend>(cache);
  ChatClient client(std::make_shared<FunctionBackend>([&](const ChatRequest& r) {
                      ++calls;
                      return replay->complete(r);
                    }),
                    e.config.parallelism);

  const PipelineResult first = run_pipeline(e.docs, e.templates, client, e.pc);
  CHECK(first.records.size() == 5);
  CHECK(first.rejects.empty());
  CHECK(static_cast<std::size_t>(calls) == first.audit.size());
  CHECK(first.audit.size() == cache->size());

  SUBCASE("records are complete") {
    for (std::size_t i = 0; i < first.records.size(); ++i) {
      const auto& r = first.records[i];
      CHECK(r.doc_id == e.docs[i].doc_id);
      CHECK_FALSE(r.summary.empty());
      CHECK_FALSE(r.structured.entries.empty());
      CHECK_FALSE(r.schema.classes.empty());
      CHECK_FALSE(r.instances.instances.empty());
      CHECK(r.report.verdicts.size() == r.report.accepted_count + r.report.rejected_count);
      CHECK(r.metadata.template_versions.size() == 4);
    }
    const auto& fw = first.records[0];
    CHECK(fw.schema.find_class("Framework") != nullptr);
    CHECK(fw.summary.find("TensorFlow") != std::string::npos);
  }
  SUBCASE("one stage needed a repair") {
    int repaired = 0;
    for (const auto& a : first.audit) {
      if (a.attempt > 1) {
        ++repaired;
        CHECK(a.doc_id == "treaty");
        CHECK(a.stage == Stage::kStructure);
      }
    }
    CHECK(repaired == 1);
  }
  SUBCASE("replay is deterministic") {
    const PipelineResult second = run_pipeline(e.docs, e.templates, client, e.pc);
    CHECK(dump_all(first) == dump_all(second));
  }
  SUBCASE("a missing cache entry rejects exactly that document") {
    const StageRecord* victim = nullptr;
    for (const auto& a : first.audit) {
      if (a.doc_id == "match-report" && a.stage == Stage::kGuidelines) victim = &a;
    }
    REQUIRE(victim != nullptr);
    const std::string key = ChatRequest::user(victim->rendered_prompt, e.pc.params).key();
    ggtest::TempDir tmp;
    auto pruned = cache_without(e.config.cache_path, tmp / "cache.jsonl", key);
    CHECK(pruned->size() == cache->size() - 1);
    ChatClient mutated(std::make_shared<ReplayBackend>(pruned), 4);
    const auto r = run_pipeline(e.docs, e.templates, mutated, e.pc);
    CHECK(r.records.size() == 4);
    REQUIRE(r.rejects.size() == 1);
    CHECK(r.rejects[0].doc_id == "match-report");
    CHECK(r.rejects[0].stage == "guidelines");
    CHECK(r.rejects[0].retryable);
    CHECK(r.rejects[0].message.find(key) != std::string::npos);
  }
}

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


// Rebuilds a replay cache from scripted per-stage responses by running the
// real pipeline against a scripted backend and recording every call.
//
//   build_replay_fixture CONFIG RESPONSES OUT_CACHE
//
// RESPONSES maps doc id -> stage -> response text, or a list of texts to
// answer successive attempts of the same stage.

#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <string>

#include <json.hpp>

#include "guidegen/config.hpp"
#include "guidegen/corpus.hpp"
#include "guidegen/error.hpp"
#include "guidegen/llm_client.hpp"
#include "guidegen/pipeline.hpp"
#include "guidegen/text.hpp"

namespace gg = guidegen;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string fixed_prefix(const std::string& text) {
  std::size_t cut = text.size();
  for (const char* token : {"{document}", "{summary}", "{structured_json}", "{guidelines}"}) {
    cut = std::min(cut, text.find(token));
  }
  return text.substr(0, cut);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: build_replay_fixture CONFIG RESPONSES OUT_CACHE\n";
    return 2;
  }
  try {
    const gg::RunConfig config = gg::ConfigDocument::load(argv[1]).resolve();
    const json responses = json::parse(gg::read_file(argv[2]));
    const gg::TemplateSet templates = gg::load_templates(config);
    const std::vector<gg::Document> docs = gg::load_corpus(config.corpus_path, config.corpus_format);

    std::map<gg::Stage, std::string> prefixes;
    for (const auto& [stage, tmpl] : templates) prefixes[stage] = fixed_prefix(tmpl.text());

    std::mutex mu;
    std::map<std::pair<std::string, gg::Stage>, std::size_t> calls;
    auto scripted = std::make_shared<gg::FunctionBackend>([&](const gg::ChatRequest& req) {
      const std::string& prompt = req.messages().front().content;
      const gg::Document* doc = nullptr;
      for (const auto& d : docs) {
        if (prompt.find(d.text) != std::string::npos &&
            (doc == nullptr || d.text.size() > doc->text.size())) {
          doc = &d;
        }
      }
      std::optional<gg::Stage> stage;
      for (const auto& [s, prefix] : prefixes) {
        if (prompt.starts_with(prefix)) stage = s;
      }
      if (doc == nullptr || !stage) {
        throw gg::Error(gg::ErrorKind::kRuntime, "cannot attribute a prompt to a document");
      }
      std::lock_guard lock(mu);
      const std::size_t n = calls[{doc->doc_id, *stage}]++;
      const json& entry = responses.at(doc->doc_id).at(std::string(gg::to_string(*stage)));
      const json& text = entry.is_array() ? entry.at(std::min(n, entry.size() - 1)) : entry;
      return gg::ChatResponse{text.get<std::string>(), gg::FinishReason::kStop, std::nullopt};
    });

    const fs::path out = argv[3];
    fs::remove(out);
    auto cache = std::make_shared<gg::ReplayCache>(out);
    // One request at a time so the cache lines come out in a fixed order.
    gg::ChatClient client(std::make_shared<gg::RecordBackend>(scripted, cache), 1);

    gg::PipelineConfig pc;
    pc.policy = config.grounding;
    pc.keep_empty = config.keep_empty;
    pc.max_document_words = config.max_document_words;
    pc.max_repairs = config.max_repairs;
    pc.params = config.params;
    const gg::PipelineResult result = gg::run_pipeline(docs, templates, client, pc);
    for (const auto& r : result.rejects) {
      std::cerr << "reject: " << r.doc_id << " at " << r.stage << ": " << r.message << "\n";
    }
    std::cout << result.records.size() << " records, " << cache->size() << " cache entries\n";
    return result.rejects.empty() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

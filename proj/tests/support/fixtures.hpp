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


// Shared datasets: the replayed end-to-end run and a synthetic label
// distribution with hand-countable statistics.

#pragma once

#include <string>
#include <vector>

#include "guidegen/config.hpp"
#include "guidegen/corpus.hpp"
#include "guidegen/dataset.hpp"
#include "guidegen/pipeline.hpp"

namespace ggtest {

// Runs the checked-in replay fixture through the pipeline.
inline guidegen::PipelineResult e2e_run(const std::filesystem::path& config_path) {
  using namespace guidegen;
  const RunConfig config = ConfigDocument::load(config_path).resolve();
  const auto docs = load_corpus(config.corpus_path, config.corpus_format);
  const auto client = make_client(config);
  PipelineConfig pc;
  pc.policy = config.grounding;
  pc.max_document_words = config.max_document_words;
  pc.params = config.params;
  return run_pipeline(docs, load_templates(config), *client, pc);
}

inline guidegen::DatasetRecord label_record(const std::string& doc_id,
                                            const std::vector<std::string>& labels) {
  guidegen::DatasetRecord r;
  r.doc_id = doc_id;
  r.text = "text of " + doc_id;
  r.instances.doc_id = doc_id;
  for (const auto& l : labels) {
    r.instances.instances.push_back({l, {{"name", std::string("x")}}, 0});
  }
  return r;
}

// Record i uses Label0..Label(i % 5), where Label j appears j + 1 times;
// even records add one Topic<i>.
//   unique labels 30, distinct per doc 3.5, annotations per doc 7.5
//   annotations: Label0 50, Label1 80, Label2 90, Label3 80, Label4 50
//   documents:   Label0 50, Label1 40, Label2 30, Label3 20, Label4 10
inline std::vector<guidegen::DatasetRecord> stats_fixture() {
  std::vector<guidegen::DatasetRecord> out;
  for (int i = 0; i < 50; ++i) {
    std::vector<std::string> labels;
    for (int j = 0; j <= i % 5; ++j) {
      for (int c = 0; c <= j; ++c) labels.push_back("Label" + std::to_string(j));
    }
    if (i % 2 == 0) labels.push_back("Topic" + std::to_string(i));
    out.push_back(label_record("s" + std::to_string(i), labels));
  }
  return out;
}

}  // namespace ggtest

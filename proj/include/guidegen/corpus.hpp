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

// Source document collection: loading, seeded sampling, length statistics.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace guidegen {

// One unsegmented source text. Documents are never split into sentences or
// paragraphs; the whole text flows through every generation stage.
struct Document {
  std::string doc_id;
  std::string text;
  std::size_t word_count = 0;  // whitespace-delimited tokens of `text`
  std::string source;

  // Builds a document and derives word_count. Throws on empty text.
  static Document make(std::string doc_id, std::string text,
                       std::string source = {});
};

enum class CorpusFormat { kJsonl, kTextDirectory };

CorpusFormat parse_corpus_format(const std::string& name);

// Loads documents in on-disk order. JSONL records carry `text` and an
// optional `id`; records without an id get a zero-padded line index.
// Directory ingestion reads every *.txt file (sorted by name) with the file
// stem as doc_id.
std::vector<Document> load_corpus(const std::filesystem::path& path,
                                  CorpusFormat format);

// Draws n documents without replacement. The result is a pure function of
// (docs, n, seed), stable across platforms.
std::vector<Document> sample_corpus(std::span<const Document> docs,
                                    std::size_t n, std::uint64_t seed);

struct HistogramBucket {
  std::size_t lower = 0;  // inclusive
  std::size_t upper = 0;  // exclusive; 0 means unbounded
  std::size_t count = 0;
};

struct CorpusStats {
  std::size_t n_docs = 0;
  std::size_t min_words = 0;
  std::size_t max_words = 0;
  double mean_words = 0.0;
  std::vector<HistogramBucket> word_histogram;
};

CorpusStats corpus_stats(std::span<const Document> docs);

}  // namespace guidegen

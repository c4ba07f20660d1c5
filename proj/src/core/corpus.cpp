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

#include "guidegen/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_set>

#include <json.hpp>

#include "guidegen/error.hpp"
#include "guidegen/text.hpp"

namespace guidegen {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Upper bounds of the length histogram; the last bucket is open.
constexpr std::size_t kBucketEdges[] = {250, 500, 1000, 2000, 5000, 10000, 20000};

std::string padded_index(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%08zu", i);
  return buf;
}

// Unbiased draw in [0, bound) from the raw 64-bit engine output. Avoids
// std::uniform_int_distribution, whose algorithm is implementation-defined.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

std::vector<Document> load_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open corpus " + path.string());
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::kParse, where + ": invalid JSON: " + e.what());
    }
    if (!rec.is_object() || !rec.contains("text") || !rec["text"].is_string()) {
      throw Error(ErrorKind::kParse, where + ": record missing string field 'text'");
    }
    std::string text = rec["text"].get<std::string>();
    if (trim(text).empty()) {
      throw Error(ErrorKind::kParse, where + ": record has empty text");
    }
    std::string id;
    if (rec.contains("id") && !rec["id"].is_null()) {
      if (!rec["id"].is_string()) {
        throw Error(ErrorKind::kParse, where + ": field 'id' must be a string");
      }
      id = rec["id"].get<std::string>();
    } else {
      id = padded_index(lineno - 1);
    }
    if (!seen.insert(id).second) {
      throw Error(ErrorKind::kParse, where + ": duplicate doc_id '" + id + "'");
    }
    std::string source = path.string();
    if (auto it = rec.find("source"); it != rec.end() && it->is_string()) source = it->get<std::string>();
    docs.push_back(Document::make(std::move(id), std::move(text), std::move(source)));
  }
  if (in.bad()) throw Error(ErrorKind::kIo, "error reading " + path.string());
  return docs;
}

std::vector<Document> load_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorKind::kNotFound, "not a directory: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Document> docs;
  docs.reserve(files.size());
  for (const auto& f : files) {
    std::string text = read_file(f);
    if (trim(text).empty()) {
      throw Error(ErrorKind::kParse, f.string() + ": document has empty text");
    }
    // Stems are unique because file names within one directory are.
    docs.push_back(Document::make(f.stem().string(), std::move(text), f.string()));
  }
  return docs;
}

}  // namespace

Document Document::make(std::string doc_id, std::string text, std::string source) {
  if (trim(text).empty()) {
    throw Error(ErrorKind::kInvalidArgument, "document '" + doc_id + "' has empty text");
  }
  Document d;
  d.doc_id = std::move(doc_id);
  d.word_count = count_words(text);
  d.text = std::move(text);
  d.source = std::move(source);
  return d;
}

CorpusFormat parse_corpus_format(const std::string& name) {
  if (name == "jsonl") return CorpusFormat::kJsonl;
  if (name == "text-directory" || name == "text_directory" || name == "dir") {
    return CorpusFormat::kTextDirectory;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown corpus format '" + name + "'");
}

std::vector<Document> load_corpus(const fs::path& path, CorpusFormat format) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::kNotFound, "corpus path does not exist: " + path.string());
  }
  return format == CorpusFormat::kJsonl ? load_jsonl(path) : load_directory(path);
}

std::vector<Document> sample_corpus(std::span<const Document> docs,
                                    std::size_t n, std::uint64_t seed) {
  if (n > docs.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "sample size " + std::to_string(n) + " exceeds corpus size " +
                    std::to_string(docs.size()));
  }
  std::vector<std::size_t> idx(docs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first n slots become the sample.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + bounded(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  std::vector<Document> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(docs[idx[i]]);
  return out;
}

CorpusStats corpus_stats(std::span<const Document> docs) {
  if (docs.empty()) throw Error(ErrorKind::kInvalidArgument, "empty corpus");
  CorpusStats s;
  s.n_docs = docs.size();
  s.min_words = std::numeric_limits<std::size_t>::max();
  std::size_t lower = 0;
  for (std::size_t edge : kBucketEdges) {
    s.word_histogram.push_back({lower, edge, 0});
    lower = edge;
  }
  s.word_histogram.push_back({lower, 0, 0});

  std::uint64_t total = 0;
  for (const Document& d : docs) {
    s.min_words = std::min(s.min_words, d.word_count);
    s.max_words = std::max(s.max_words, d.word_count);
    total += d.word_count;
    for (auto& b : s.word_histogram) {
      if (d.word_count >= b.lower && (b.upper == 0 || d.word_count < b.upper)) {
        ++b.count;
        break;
      }
    }
  }
  s.mean_words = static_cast<double>(total) / static_cast<double>(docs.size());
  return s;
}

}  // namespace guidegen

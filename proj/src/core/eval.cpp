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

#include "guidegen/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "guidegen/error.hpp"
#include "guidegen/notation.hpp"
#include "guidegen/text.hpp"

namespace guidegen {

namespace fs = std::filesystem;
using json = nlohmann::json;

MatchMode parse_match_mode(std::string_view name) {
  if (name == "exact") return MatchMode::kExact;
  if (name == "normalized") return MatchMode::kNormalized;
  throw Error(ErrorKind::kInvalidArgument,
              "unknown matching mode '" + std::string(name) + "' (expected exact or normalized)");
}

double Score::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double Score::recall() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double Score::f1() const {
  // Equal to 2PR/(P+R), computed from counts to avoid rounding.
  const std::uint64_t denom = 2 * tp + fp + fn;
  return tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

namespace {

using Key = std::pair<std::string, std::string>;  // label, matched span form

std::string span_key(const std::string& span, MatchMode mode) {
  return mode == MatchMode::kExact ? span : normalize_text(span, true, true);
}

std::map<Key, std::uint64_t> bag(std::span<const Mention> mentions, MatchMode mode) {
  std::map<Key, std::uint64_t> out;
  for (const auto& m : mentions) ++out[{m.label, span_key(m.span, mode)}];
  return out;
}

// Per-example pairing of golds with predictions.
std::vector<std::pair<const GoldExample*, const Prediction*>> align(
    std::span<const GoldExample> golds, std::span<const Prediction> preds) {
  std::unordered_map<std::string, std::size_t> gold_index;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (!gold_index.emplace(golds[i].example_id, i).second) {
      throw Error(ErrorKind::kInvalidArgument,
                  "duplicate gold example id '" + golds[i].example_id + "'");
    }
  }
  std::vector<const Prediction*> by_gold(golds.size(), nullptr);
  for (const auto& p : preds) {
    auto it = gold_index.find(p.example_id);
    if (it == gold_index.end()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "prediction for unknown example id '" + p.example_id + "'");
    }
    if (by_gold[it->second] != nullptr) {
      throw Error(ErrorKind::kInvalidArgument,
                  "duplicate prediction for example id '" + p.example_id + "'");
    }
    by_gold[it->second] = &p;
  }
  std::vector<std::pair<const GoldExample*, const Prediction*>> out;
  for (std::size_t i = 0; i < golds.size(); ++i) out.emplace_back(&golds[i], by_gold[i]);
  return out;
}

void accumulate(const GoldExample& gold, const Prediction* pred, MatchMode mode,
                std::map<std::string, Score>& by_label) {
  const auto g = bag(gold.mentions, mode);
  const auto p = pred ? bag(pred->mentions, mode) : std::map<Key, std::uint64_t>{};
  for (const auto& [key, n] : g) {
    auto it = p.find(key);
    const std::uint64_t matched = it == p.end() ? 0 : std::min(n, it->second);
    auto& s = by_label[key.first];
    s.tp += matched;
    s.fn += n - matched;
  }
  for (const auto& [key, n] : p) {
    auto it = g.find(key);
    const std::uint64_t matched = it == g.end() ? 0 : std::min(n, it->second);
    by_label[key.first].fp += n - matched;
  }
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
  return buf;
}

json score_json(const Score& s) {
  return {{"tp", s.tp},
          {"fp", s.fp},
          {"fn", s.fn},
          {"precision", s.precision()},
          {"recall", s.recall()},
          {"f1", s.f1()}};
}

}  // namespace

EvalResult score(std::span<const GoldExample> golds, std::span<const Prediction> preds,
                 MatchMode mode) {
  EvalResult r;
  for (const auto& [gold, pred] : align(golds, preds)) {
    accumulate(*gold, pred, mode, r.by_label);
  }
  for (const auto& [_, s] : r.by_label) r.total += s;
  return r;
}

double macro_average(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::kInvalidArgument, "macro average of no values");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

BenchmarkReport score_benchmarks(const std::map<std::string, Suite>& suites, MatchMode mode) {
  if (suites.empty()) throw Error(ErrorKind::kInvalidArgument, "no benchmark suites to score");
  BenchmarkReport report;
  std::vector<double> f1s;
  for (const auto& [name, suite] : suites) {
    try {
      EvalResult r = score(suite.golds, suite.preds, mode);
      f1s.push_back(r.f1());
      report.datasets.emplace(name, std::move(r));
    } catch (const Error& e) {
      throw Error(e.kind(), name + ": " + e.what());
    }
  }
  report.average_f1 = macro_average(f1s);
  return report;
}

json BenchmarkReport::to_json() const {
  json ds = json::object();
  for (const auto& [name, r] : datasets) {
    json j = score_json(r.total);
    json labels = json::object();
    for (const auto& [label, s] : r.by_label) labels[label] = score_json(s);
    j["labels"] = std::move(labels);
    ds[name] = std::move(j);
  }
  return {{"datasets", ds}, {"average_f1", average_f1}};
}

std::string BenchmarkReport::to_table() const {
  std::ostringstream head, row;
  for (const auto& [name, _] : datasets) {
    const std::size_t w = std::max<std::size_t>(name.size(), 6);
    head << std::string(w - name.size(), ' ') << name << " ";
  }
  head << "AVERAGE";
  for (const auto& [name, r] : datasets) {
    const std::size_t w = std::max<std::size_t>(name.size(), 6);
    const std::string v = pct(r.f1());
    row << std::string(w > v.size() ? w - v.size() : 0, ' ') << v << " ";
  }
  const std::string avg = pct(average_f1);
  row << std::string(7 > avg.size() ? 7 - avg.size() : 0, ' ') << avg;
  return head.str() + "\n" + row.str() + "\n";
}

std::vector<LabelRow> label_report(std::span<const GoldExample> golds,
                                   std::span<const Prediction> preds,
                                   std::span<const std::string> labels, MatchMode mode) {
  const std::set<std::string> wanted(labels.begin(), labels.end());
  auto keep = [&](const std::vector<Mention>& ms) {
    std::vector<Mention> out;
    for (const auto& m : ms) {
      if (wanted.count(m.label)) out.push_back(m);
    }
    return out;
  };
  std::vector<GoldExample> g;
  for (const auto& x : golds) g.push_back({x.example_id, x.text, keep(x.mentions)});
  std::vector<Prediction> p;
  for (const auto& x : preds) p.push_back({x.example_id, keep(x.mentions), x.parse_failed});
  const EvalResult r = score(g, p, mode);
  std::vector<LabelRow> rows;
  for (const auto& label : labels) {
    LabelRow row;
    row.label = label;
    auto it = r.by_label.find(label);
    if (it == r.by_label.end()) {
      row.absent = true;
    } else {
      row.score = it->second;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string label_report_table(std::span<const LabelRow> rows) {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-24s %6s %6s %6s %8s %8s %8s\n", "label", "tp", "fp", "fn",
                "P", "R", "F1");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-24s %6llu %6llu %6llu %8s %8s %8s%s\n", r.label.c_str(),
                  static_cast<unsigned long long>(r.score.tp),
                  static_cast<unsigned long long>(r.score.fp),
                  static_cast<unsigned long long>(r.score.fn), pct(r.score.precision()).c_str(),
                  pct(r.score.recall()).c_str(), pct(r.score.f1()).c_str(),
                  r.absent ? "  (absent)" : "");
    os << buf;
  }
  return os.str();
}

bool mentions_from_output(std::string_view output, const MentionFieldMap& fields,
                          std::vector<Mention>& out) {
  out.clear();
  InstanceSet set;
  try {
    set = parse_instances(output);
  } catch (const ParseError&) {
    return false;
  }
  for (const auto& inst : set.instances) {
    const FieldValue* value = nullptr;
    if (auto it = fields.find(inst.class_name); it != fields.end()) {
      value = inst.find(it->second);
    } else if (!inst.assignments.empty()) {
      value = &inst.assignments.front().value;
    }
    if (value == nullptr) continue;
    if (const auto* s = std::get_if<std::string>(value)) {
      if (!s->empty()) out.push_back({inst.class_name, *s});
    } else {
      for (const auto& item : std::get<std::vector<std::string>>(*value)) {
        if (!item.empty()) out.push_back({inst.class_name, item});
      }
    }
  }
  return true;
}

namespace {

template <typename Fn>
void for_each_jsonl(const fs::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::vector<Mention> mentions_from_json(const json& arr) {
  std::vector<Mention> out;
  for (const auto& m : arr) {
    Mention mention{m.at("label").get<std::string>(), m.at("span").get<std::string>()};
    if (mention.span.empty()) throw Error(ErrorKind::kParse, "mention with empty span");
    out.push_back(std::move(mention));
  }
  return out;
}

}  // namespace

std::vector<GoldExample> load_gold_file(const fs::path& path) {
  std::vector<GoldExample> out;
  for_each_jsonl(path, [&](const json& j) {
    out.push_back({j.at("id").get<std::string>(), j.value("text", std::string()),
                   mentions_from_json(j.at("mentions"))});
  });
  return out;
}

std::vector<Prediction> load_prediction_file(const fs::path& path,
                                             const MentionFieldMap& fields) {
  std::vector<Prediction> out;
  for_each_jsonl(path, [&](const json& j) {
    Prediction p;
    p.example_id = j.at("id").get<std::string>();
    if (j.contains("mentions")) {
      p.mentions = mentions_from_json(j["mentions"]);
    } else {
      const std::string output = j.at("output").get<std::string>();
      p.parse_failed = !mentions_from_output(output, fields, p.mentions);
    }
    out.push_back(std::move(p));
  });
  return out;
}

EvalRun evaluate_directories(const fs::path& gold_dir, const fs::path& pred_dir,
                             MatchMode mode) {
  for (const auto& d : {gold_dir, pred_dir}) {
    if (!fs::is_directory(d)) throw Error(ErrorKind::kNotFound, "not a directory: " + d.string());
  }
  std::vector<fs::path> gold_files;
  for (const auto& e : fs::directory_iterator(gold_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") gold_files.push_back(e.path());
  }
  std::sort(gold_files.begin(), gold_files.end());
  if (gold_files.empty()) {
    throw Error(ErrorKind::kNotFound, "no *.jsonl gold files in " + gold_dir.string());
  }
  EvalRun run;
  std::map<std::string, Suite> suites;
  for (const auto& gf : gold_files) {
    const std::string name = gf.stem().string();
    MentionFieldMap fields;
    const fs::path map_file = gold_dir / (name + ".fields.json");
    if (fs::exists(map_file)) {
      try {
        fields = json::parse(read_file(map_file)).get<MentionFieldMap>();
      } catch (const json::exception& e) {
        throw Error(ErrorKind::kParse, map_file.string() + ": " + e.what());
      }
    }
    Suite suite;
    suite.golds = load_gold_file(gf);
    const fs::path pf = pred_dir / gf.filename();
    if (fs::exists(pf)) {
      suite.preds = load_prediction_file(pf, fields);
      const auto failed = std::count_if(suite.preds.begin(), suite.preds.end(),
                                        [](const Prediction& p) { return p.parse_failed; });
      if (failed > 0) {
        run.warnings.push_back(name + ": " + std::to_string(failed) +
                               " unparseable output(s) scored as empty");
      }
    } else {
      run.warnings.push_back(name + ": no prediction file, scored as empty");
    }
    suites.emplace(name, std::move(suite));
  }
  run.report = score_benchmarks(suites, mode);
  return run;
}

}  // namespace guidegen

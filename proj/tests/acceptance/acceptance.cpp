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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "generators.hpp"
#include "guidegen/dataset.hpp"
#include "guidegen/eval.hpp"
#include "guidegen/notation.hpp"
#include "guidegen/text.hpp"
#include "guidegen/validator.hpp"
#include "testing.hpp"

using namespace guidegen;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// 1. Notation round trip.
Outcome round_trip() {
  const auto t0 = Clock::now();
  ggtest::Rng rng(1);
  constexpr int kCases = 1000;
  int schema_ok = 0;
  int inst_ok = 0;
  for (int i = 0; i < kCases; ++i) {
    const Schema s = ggtest::schema(rng);
    if (same_structure(parse_guidelines(print_guidelines(s)), s)) ++schema_ok;
    const InstanceSet set = ggtest::instance_set(rng);
    const InstanceSet back = parse_instances(print_instances(set));
    bool same = back.instances.size() == set.instances.size();
    for (std::size_t k = 0; same && k < set.instances.size(); ++k) {
      same = same_structure(back.instances[k], set.instances[k]);
    }
    if (same) ++inst_ok;
  }
  const double secs = seconds_since(t0);
  return {schema_ok == kCases && inst_ok == kCases && secs < 30.0,
          std::to_string(schema_ok) + "/" + std::to_string(kCases) + " schemas, " +
              std::to_string(inst_ok) + "/" + std::to_string(kCases) + " instance sets, " +
              fmt("%.2f s", secs)};
}

// 2. Each seeded defect yields exactly its own error code; filtering is sound.
Outcome validator_taxonomy() {
  ggtest::Rng rng(2);
  constexpr int kPerCode = 500;
  std::string detail;
  bool pass = true;
  for (ErrorCode code : kAllErrorCodes) {
    int exact = 0;
    for (int i = 0; i < kPerCode; ++i) {
      ggtest::ValidFixture fx = ggtest::valid_fixture(rng);
      const GroundingPolicy policy =
          ggtest::coin(rng) ? GroundingPolicy::exact() : GroundingPolicy::normalized();
      if (validate(fx.set, fx.schema, fx.doc, policy).rejected_count != 0) continue;
      const std::size_t idx = ggtest::corrupt(rng, fx, code);
      const ValidationReport r = validate(fx.set, fx.schema, fx.doc, policy);
      bool ok = r.rejected_count == 1 && r.verdicts[idx].status == Verdict::kRejected;
      for (const auto& e : r.verdicts[idx].errors) ok = ok && e.code == code;
      if (ok) ++exact;
    }
    pass = pass && exact == kPerCode;
    detail += std::string(to_string(code)) + " " + std::to_string(exact) + "/" +
              std::to_string(kPerCode) + ", ";
  }
  int sound = 0;
  constexpr int kFilterCases = 500;
  for (int i = 0; i < kFilterCases; ++i) {
    ggtest::ValidFixture fx = ggtest::valid_fixture(rng);
    for (std::size_t k = 0; k < fx.set.instances.size(); ++k) {
      if (ggtest::coin(rng, 0.4)) {
        ggtest::corrupt(rng, fx, kAllErrorCodes[ggtest::pick(rng, 0, 5)], k);
      }
    }
    const GroundingPolicy policy;
    const InstanceSet kept = filter(fx.set, validate(fx.set, fx.schema, fx.doc, policy));
    if (validate(kept, fx.schema, fx.doc, policy).rejected_count == 0) ++sound;
  }
  pass = pass && sound == kFilterCases;
  detail += "filter sound " + std::to_string(sound) + "/" + std::to_string(kFilterCases);
  return {pass, detail};
}

// 3. Scorer equals the brute-force matcher; self-score is perfect.
Outcome scorer_oracle() {
  ggtest::Rng rng(3);
  constexpr int kSuites = 1000;
  int equal = 0;
  int perfect = 0;
  for (int i = 0; i < kSuites; ++i) {
    const Suite s = ggtest::suite(rng);
    const Score got = score(s.golds, s.preds).total;
    const ggtest::Counts want = ggtest::oracle_counts(s.golds, s.preds);
    if (got.tp == want.tp && got.fp == want.fp && got.fn == want.fn) ++equal;
    std::vector<Prediction> self;
    for (const auto& g : s.golds) self.push_back({g.example_id, g.mentions, false});
    std::size_t mentions = 0;
    for (const auto& g : s.golds) mentions += g.mentions.size();
    const EvalResult r = score(s.golds, self);
    // A gold file without mentions has nothing to score.
    if ((mentions == 0 && r.total == Score{}) || r.f1() == 1.0) ++perfect;
  }
  return {equal == kSuites && perfect == kSuites,
          std::to_string(equal) + "/" + std::to_string(kSuites) + " suites match the oracle, " +
              std::to_string(perfect) + "/" + std::to_string(kSuites) + " self-scores perfect"};
}

// Suite whose micro F1 is exactly points / 100.
Suite suite_with_f1(double points) {
  const auto v = static_cast<std::uint64_t>(std::llround(points * 100.0));
  GoldExample g{"e", "", {}};
  Prediction p{"e", {}, false};
  for (std::uint64_t i = 0; i < 10000; ++i) {
    g.mentions.push_back({"L", (i < v ? "m" : "g") + std::to_string(i)});
    p.mentions.push_back({"L", (i < v ? "m" : "p") + std::to_string(i)});
  }
  return {{g}, {p}};
}

// 4. Macro average over seven benchmark F1 values.
Outcome macro_anchor() {
  const double table[] = {62.41, 63.79, 67.92, 64.59, 69.58, 65.25, 55.50};
  std::map<std::string, Suite> suites;
  for (std::size_t i = 0; i < 7; ++i) suites["bench" + std::to_string(i)] = suite_with_f1(table[i]);
  const double avg = score_benchmarks(suites).average_f1 * 100.0;
  return {std::fabs(avg - 64.15) <= 0.01, "average " + fmt("%.4f", avg) + " (target 64.15 +/- 0.01)"};
}

// 5. Label statistics.
Outcome statistics() {
  if (const char* released = std::getenv("GUIDEGEN_RELEASED_DATASET")) {
    const LabelStats s = compute_stats(read_dataset(released, true).records);
    const auto top = s.top_k(1);
    const bool pass = s.unique_label_count() == 28677 &&
                      std::fabs(s.avg_distinct_labels_per_doc() - 5.34) <= 0.01 &&
                      std::fabs(s.avg_annotations_per_doc() - 11.39) <= 0.01 && !top.empty() &&
                      top[0].label == "Symptom" && top[0].annotations == 1820;
    return {pass, "released dataset: " + std::to_string(s.unique_label_count()) + " labels, " +
                      fmt("%.2f", s.avg_distinct_labels_per_doc()) + " / " +
                      fmt("%.2f", s.avg_annotations_per_doc()) + " per doc"};
  }
  ggtest::TempDir tmp;
  write_dataset(tmp / "synthetic.jsonl", ggtest::stats_fixture());
  const LabelStats s = compute_stats(read_dataset(tmp / "synthetic.jsonl").records);
  const std::uint64_t ann[] = {50, 80, 90, 80, 50};
  const std::uint64_t docs[] = {50, 40, 30, 20, 10};
  bool pass = s.n_docs == 50 && s.unique_label_count() == 30 &&
              s.total_doc_labels * 2 == s.n_docs * 7 && s.total_annotations * 2 == s.n_docs * 15;
  for (int j = 0; j < 5; ++j) {
    const auto it = s.label_frequency.find("Label" + std::to_string(j));
    pass = pass && it != s.label_frequency.end() && it->second.annotations == ann[j] &&
           it->second.documents == docs[j];
  }
  const auto top = s.top_k(1);
  pass = pass && top.size() == 1 && top[0].label == "Label2" && top[0].annotations == 90;
  return {pass, "released dataset not supplied; 50-record synthetic fixture: " +
                    std::to_string(s.unique_label_count()) + " labels, " +
                    fmt("%.2f", s.avg_distinct_labels_per_doc()) + " distinct / " +
                    fmt("%.2f", s.avg_annotations_per_doc()) + " annotations per doc, top " +
                    (top.empty() ? std::string("-") : top[0].label)};
}

// Gold inventory of `gold` labels of which the first `matched` are generated.
void inventory(std::size_t gold, std::size_t matched, const std::string& prefix,
               std::set<std::string>& gold_out, std::set<std::string>& dataset_out) {
  for (std::size_t i = 0; i < gold; ++i) {
    const std::string l = prefix + std::to_string(i);
    gold_out.insert(l);
    if (i < matched) dataset_out.insert(l);
  }
}

// 6. Label-space coverage.
Outcome overlap() {
  LabelSpaces spaces;
  std::set<std::string> labels = {"OnlyInDataset"};
  std::set<std::string> train_a, train_b, test_a, test_b;
  inventory(143, 60, "TrainA", train_a, labels);
  inventory(100, 43, "TrainB", train_b, labels);
  inventory(135, 58, "TestA", test_a, labels);
  inventory(100, 40, "TestB", test_b, labels);
  spaces["a"]["train"] = train_a;
  spaces["b"]["train"] = train_b;
  spaces["a"]["test"] = test_a;
  spaces["b"]["test"] = test_b;
  const auto rows = compute_overlap(labels, spaces);
  bool pass = true;
  std::string detail;
  for (const auto& r : rows) {
    if (r.benchmark == kAggregateBenchmark) {
      const bool train = r.split == "train";
      const std::size_t g = train ? 243 : 235;
      const std::size_t m = train ? 103 : 98;
      const double pp = train ? 42.4 : 41.7;
      pass = pass && r.gold_label_count == g && r.matched_count == m &&
             std::fabs(r.coverage * 100.0 - pp) <= 0.1;
      detail += r.split + " " + std::to_string(r.matched_count) + "/" +
                std::to_string(r.gold_label_count) + " = " + fmt("%.1f%%", r.coverage * 100.0) +
                ", ";
    } else {
      const auto& gold = spaces.at(r.benchmark).at(r.split);
      std::size_t expect = 0;
      for (const auto& l : gold) expect += labels.count(l);
      pass = pass && r.matched_count == expect &&
             r.coverage == static_cast<double>(expect) / static_cast<double>(gold.size());
    }
  }
  const auto disjoint = compute_overlap({"Nothing"}, spaces);
  for (const auto& r : disjoint) pass = pass && r.coverage == 0.0;
  detail += "per-benchmark and disjoint cases exact (constructed inventories)";
  return {pass, detail};
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

int run_cli(const std::string& args, const fs::path& stdout_file) {
  const std::string cmd = shell_quote(GG_CLI_PATH) + " " + args + " > " +
                          shell_quote(stdout_file.string()) + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 7. Offline end-to-end run through the command-line tool, twice.
Outcome end_to_end() {
  const auto t0 = Clock::now();
  ggtest::TempDir tmp;
  const std::string config = shell_quote(ggtest::fixture("e2e/config.json").string());
  const std::vector<std::string> outputs = {
      "dataset.jsonl",  "rejects.jsonl",    "stages.jsonl",
      "reports.jsonl",  "validated.jsonl",  "validation_reports.jsonl",
      "train.jsonl",    "stats.txt"};
  std::string failure;
  for (const char* run : {"a", "b"}) {
    const fs::path out = tmp / run;
    const std::string base = "--config " + config + " --output-dir " + shell_quote(out.string());
    const std::vector<std::pair<std::string, std::string>> steps = {
        {"generate", base + " --quiet generate"},
        {"validate", base + " --quiet validate"},
        {"stats", base + " stats"},
        {"emit-train", base + " --quiet emit-train"}};
    for (const auto& [name, args] : steps) {
      fs::create_directories(out);
      const fs::path log = out / (name == "stats" ? "stats.txt" : name + ".log");
      const int rc = run_cli(args, log);
      if (rc != 0 && failure.empty()) {
        failure = std::string(run) + ": " + name + " exited " + std::to_string(rc);
      }
    }
  }
  std::size_t identical = 0;
  for (const auto& f : outputs) {
    if (fs::exists(tmp / "a" / f) && read_file(tmp / "a" / f) == read_file(tmp / "b" / f)) {
      ++identical;
    }
  }
  std::size_t targets = 0;
  std::size_t good_targets = 0;
  if (failure.empty()) {
    const auto records = read_dataset(tmp / "a" / "dataset.jsonl").records;
    std::ifstream train(tmp / "a" / "train.jsonl");
    std::size_t i = 0;
    for (std::string line; std::getline(train, line); ++i) {
      ++targets;
      try {
        const auto j = nlohmann::json::parse(line);
        InstanceSet set = parse_instances(j.at("target").get<std::string>());
        set.doc_id = records.at(i).doc_id;
        const Document doc = Document::make(records.at(i).doc_id, records.at(i).text);
        if (validate(set, records.at(i).schema, doc, GroundingPolicy{}).rejected_count == 0 &&
            !set.instances.empty()) {
          ++good_targets;
        }
      } catch (const std::exception&) {
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = failure.empty() && identical == outputs.size() && targets == 5 &&
                    good_targets == targets && secs < 60.0;
  std::string detail = failure.empty() ? "" : failure + "; ";
  detail += std::to_string(identical) + "/" + std::to_string(outputs.size()) +
            " outputs byte-identical across runs, " + std::to_string(good_targets) + "/" +
            std::to_string(targets) + " targets re-parse and re-validate, " +
            fmt("%.2f s", secs);
  return {pass, detail};
}

// 8. Model-quality results are out of reach at desk scale.
Outcome statement() {
  return {true,
          "headline fine-tuned model scores need multi-GPU fine-tuning of an 8B model and "
          "are not reproduced here; criteria 1-7 stand in for them"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"notation round trip", round_trip},
      {"validator error taxonomy", validator_taxonomy},
      {"scorer oracle equivalence", scorer_oracle},
      {"macro-average anchor", macro_anchor},
      {"label statistics", statistics},
      {"label overlap", overlap},
      {"end-to-end replay", end_to_end},
      {"non-reproducibility statement", statement},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << "criterion " << i + 1 << " [" << (o.pass ? "PASS" : "FAIL") << "] "
              << criteria[i].first << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

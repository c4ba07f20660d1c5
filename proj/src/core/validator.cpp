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

#include "guidegen/validator.hpp"

#include "guidegen/error.hpp"
#include "guidegen/text.hpp"

namespace guidegen {

using json = nlohmann::json;

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUndefinedEntityType: return "UndefinedEntityType";
    case ErrorCode::kMisalignedAttribute: return "MisalignedAttribute";
    case ErrorCode::kMissingRequiredField: return "MissingRequiredField";
    case ErrorCode::kTypeMismatch: return "TypeMismatch";
    case ErrorCode::kUngroundedSpan: return "UngroundedSpan";
    case ErrorCode::kEmptyValue: return "EmptyValue";
  }
  return "Unknown";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) {
  for (ErrorCode c : kAllErrorCodes) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

GroundingPolicy GroundingPolicy::parse(std::string_view name) {
  if (name == "exact") return exact();
  if (name == "normalized") return normalized();
  if (name == "off") return off();
  throw Error(ErrorKind::kInvalidArgument,
              "unknown grounding policy '" + std::string(name) +
                  "' (expected exact, normalized or off)");
}

std::string GroundingPolicy::name() const {
  switch (mode) {
    case GroundingMode::kExact: return "exact";
    case GroundingMode::kNormalized: return "normalized";
    case GroundingMode::kOff: return "off";
  }
  return "off";
}

json ValidationReport::to_json() const {
  json verdict_list = json::array();
  for (const auto& v : verdicts) {
    json errs = json::array();
    for (const auto& e : v.errors) {
      errs.push_back({{"code", to_string(e.code)}, {"message", e.message}});
    }
    verdict_list.push_back({{"index", v.index},
                            {"status", v.status == Verdict::kAccepted ? "accepted" : "rejected"},
                            {"errors", std::move(errs)}});
  }
  return {{"doc_id", doc_id},
          {"accepted", accepted_count},
          {"rejected", rejected_count},
          {"verdicts", std::move(verdict_list)}};
}

ValidationReport ValidationReport::from_json(const json& j) {
  ValidationReport r;
  r.doc_id = j.at("doc_id").get<std::string>();
  r.accepted_count = j.at("accepted").get<std::size_t>();
  r.rejected_count = j.at("rejected").get<std::size_t>();
  for (const auto& v : j.at("verdicts")) {
    InstanceVerdict iv;
    iv.index = v.at("index").get<std::size_t>();
    iv.status = v.at("status").get<std::string>() == "accepted" ? Verdict::kAccepted
                                                                : Verdict::kRejected;
    for (const auto& e : v.at("errors")) {
      const auto code = error_code_from_string(e.at("code").get<std::string>());
      if (!code) {
        throw Error(ErrorKind::kParse, "unknown error code " + e.at("code").dump());
      }
      iv.errors.push_back({*code, e.at("message").get<std::string>()});
    }
    r.verdicts.push_back(std::move(iv));
  }
  return r;
}

namespace {

class Grounder {
 public:
  Grounder(const Document& doc, const GroundingPolicy& policy)
      : policy_(policy), doc_(doc.text) {
    if (policy_.mode == GroundingMode::kNormalized) {
      normalized_doc_ = normalize_text(doc.text, policy_.case_fold, policy_.collapse_whitespace);
    }
  }

  bool grounded(std::string_view value) const {
    switch (policy_.mode) {
      case GroundingMode::kOff:
        return true;
      case GroundingMode::kExact:
        return doc_.find(value) != std::string_view::npos;
      case GroundingMode::kNormalized:
        return normalized_doc_.find(normalize_text(value, policy_.case_fold,
                                                   policy_.collapse_whitespace)) !=
               std::string::npos;
    }
    return false;
  }

 private:
  GroundingPolicy policy_;
  std::string_view doc_;
  std::string normalized_doc_;
};

void check_string(const std::string& field, const std::string& value,
                  const Grounder& grounder, std::vector<ValidationError>& errors) {
  if (trim(value).empty()) {
    errors.push_back({ErrorCode::kEmptyValue, "field '" + field + "' has an empty value"});
    return;
  }
  if (!grounder.grounded(value)) {
    errors.push_back({ErrorCode::kUngroundedSpan,
                      "value " + quote_string(value) + " of field '" + field +
                          "' does not occur in the document"});
  }
}

void check_values(const Assignment& a, const Grounder& grounder,
                  std::vector<ValidationError>& errors) {
  if (const auto* s = std::get_if<std::string>(&a.value)) {
    check_string(a.field, *s, grounder, errors);
    return;
  }
  const auto& items = std::get<std::vector<std::string>>(a.value);
  if (items.empty()) {
    errors.push_back({ErrorCode::kEmptyValue, "field '" + a.field + "' has an empty list"});
  }
  for (const auto& item : items) check_string(a.field, item, grounder, errors);
}

}  // namespace

ValidationReport validate(const InstanceSet& set, const Schema& schema,
                          const Document& doc, const GroundingPolicy& policy) {
  if (set.doc_id != doc.doc_id) {
    throw Error(ErrorKind::kInvalidArgument, "instance set for '" + set.doc_id +
                                                 "' validated against document '" +
                                                 doc.doc_id + "'");
  }
  const Grounder grounder(doc, policy);
  ValidationReport report;
  report.doc_id = set.doc_id;
  for (std::size_t i = 0; i < set.instances.size(); ++i) {
    const EntityInstance& inst = set.instances[i];
    InstanceVerdict verdict;
    verdict.index = i;
    auto& errors = verdict.errors;

    const EntityClass* cls = schema.find_class(inst.class_name);
    if (cls == nullptr) {
      errors.push_back({ErrorCode::kUndefinedEntityType,
                        "entity type '" + inst.class_name + "' is not defined"});
    }
    for (const Assignment& a : inst.assignments) {
      if (cls != nullptr) {
        const FieldDef* field = cls->find_field(a.field);
        if (field == nullptr) {
          errors.push_back({ErrorCode::kMisalignedAttribute,
                            "'" + a.field + "' is not a field of '" + cls->name + "'"});
        } else {
          const bool is_list = std::holds_alternative<std::vector<std::string>>(a.value);
          if (is_list && field->kind == FieldKind::kText) {
            errors.push_back({ErrorCode::kTypeMismatch,
                              "field '" + a.field + "' expects a string, got a list"});
          } else if (!is_list && field->kind == FieldKind::kTextList) {
            errors.push_back({ErrorCode::kTypeMismatch,
                              "field '" + a.field + "' expects a list, got a string"});
          }
        }
      }
      check_values(a, grounder, errors);
    }
    if (cls != nullptr) {
      for (const FieldDef& f : cls->fields) {
        if (f.required && inst.find(f.name) == nullptr) {
          errors.push_back({ErrorCode::kMissingRequiredField,
                            "required field '" + f.name + "' is not assigned"});
        }
      }
    }
    if (errors.empty()) {
      ++report.accepted_count;
    } else {
      verdict.status = Verdict::kRejected;
      ++report.rejected_count;
    }
    report.verdicts.push_back(std::move(verdict));
  }
  return report;
}

InstanceSet filter(const InstanceSet& set, const ValidationReport& report) {
  if (report.verdicts.size() != set.instances.size() || report.doc_id != set.doc_id) {
    throw Error(ErrorKind::kInvalidArgument,
                "validation report does not match instance set '" + set.doc_id + "'");
  }
  InstanceSet out;
  out.doc_id = set.doc_id;
  for (std::size_t i = 0; i < set.instances.size(); ++i) {
    if (report.verdicts[i].index != i) {
      throw Error(ErrorKind::kInvalidArgument, "validation report verdicts out of order");
    }
    if (report.verdicts[i].status == Verdict::kAccepted) {
      out.instances.push_back(set.instances[i]);
    }
  }
  out.source_text = print_instances(out);
  return out;
}

}  // namespace guidegen

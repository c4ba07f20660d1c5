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

// Static consistency checks of instance sets against their schema and source
// document, and the filter that keeps only schema-compliant instances.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "guidegen/corpus.hpp"
#include "guidegen/notation.hpp"

namespace guidegen {

// Closed set. The string spellings are a stable file format.
enum class ErrorCode {
  kUndefinedEntityType,
  kMisalignedAttribute,
  kMissingRequiredField,
  kTypeMismatch,
  kUngroundedSpan,
  kEmptyValue,
};

inline constexpr ErrorCode kAllErrorCodes[] = {
    ErrorCode::kUndefinedEntityType, ErrorCode::kMisalignedAttribute,
    ErrorCode::kMissingRequiredField, ErrorCode::kTypeMismatch,
    ErrorCode::kUngroundedSpan,       ErrorCode::kEmptyValue,
};

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(std::string_view name);

enum class GroundingMode { kExact, kNormalized, kOff };

struct GroundingPolicy {
  GroundingMode mode = GroundingMode::kNormalized;
  bool case_fold = true;
  bool collapse_whitespace = true;

  static GroundingPolicy exact() { return {GroundingMode::kExact, false, false}; }
  static GroundingPolicy normalized() { return {}; }
  static GroundingPolicy off() { return {GroundingMode::kOff, false, false}; }

  // Accepts "exact", "normalized", "off".
  static GroundingPolicy parse(std::string_view name);
  std::string name() const;
};

struct ValidationError {
  ErrorCode code;
  std::string message;
};

enum class Verdict { kAccepted, kRejected };

struct InstanceVerdict {
  std::size_t index = 0;
  Verdict status = Verdict::kAccepted;
  std::vector<ValidationError> errors;
};

struct ValidationReport {
  std::string doc_id;
  std::vector<InstanceVerdict> verdicts;
  std::size_t accepted_count = 0;
  std::size_t rejected_count = 0;

  nlohmann::json to_json() const;
  static ValidationReport from_json(const nlohmann::json& j);
};

// Checks every instance and reports every error found, not just the first.
// Throws Error(kInvalidArgument) if set.doc_id != doc.doc_id.
ValidationReport validate(const InstanceSet& set, const Schema& schema,
                          const Document& doc, const GroundingPolicy& policy);

// Keeps exactly the accepted instances, in order. Throws if the report does
// not describe `set`.
InstanceSet filter(const InstanceSet& set, const ValidationReport& report);

}  // namespace guidegen

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

// Code-style annotation notation.
//
// Guidelines are written as decorated class definitions whose docstring is
// the annotation guideline and whose annotated attributes are the fields:
//
//   @dataclass
//   class Framework:
//       """A software library for building machine learning models."""
//       name: str  # the framework name
//       developer: Optional[List[str]]  # organizations that develop it
//
// Instances are a bracketed list of keyword constructor calls:
//
//   [Framework(name="TensorFlow", developer=["Google"])]
//
// The notation is parsed as a small standalone language; nothing is
// executed. Supported field kinds are `str` and `List[str]`, each optionally
// wrapped in `Optional[...]`, which marks the field as not required.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace guidegen {

enum class FieldKind { kText, kTextList };

struct FieldDef {
  std::string name;
  FieldKind kind = FieldKind::kText;
  std::string comment;  // single line, trimmed; empty when absent
  bool required = true;

  friend bool operator==(const FieldDef&, const FieldDef&) = default;
};

struct EntityClass {
  std::string name;
  std::string guideline;  // docstring, dedented and trimmed
  std::vector<FieldDef> fields;

  const FieldDef* find_field(std::string_view field_name) const;

  friend bool operator==(const EntityClass&, const EntityClass&) = default;
};

struct Schema {
  std::vector<EntityClass> classes;
  std::string source_text;  // verbatim input; not part of structural equality

  const EntityClass* find_class(std::string_view class_name) const;
};

using FieldValue = std::variant<std::string, std::vector<std::string>>;

struct Assignment {
  std::string field;
  FieldValue value;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct EntityInstance {
  std::string class_name;
  std::vector<Assignment> assignments;  // source order, keys unique
  std::size_t source_offset = 0;        // byte offset of the call in the input

  const FieldValue* find(std::string_view field_name) const;
};

struct InstanceSet {
  std::string doc_id;
  std::vector<EntityInstance> instances;
  std::string source_text;  // the isolated list literal
};

// Structural equality ignores source text and offsets.
bool same_structure(const Schema& a, const Schema& b);
bool same_structure(const EntityInstance& a, const EntityInstance& b);
bool same_structure(const InstanceSet& a, const InstanceSet& b);

// Throws ParseError with the line and column of the offending construct.
Schema parse_guidelines(std::string_view text);

// Locates the outermost list literal amid surrounding prose and parses it.
// The returned set has an empty doc_id. Throws ParseError.
InstanceSet parse_instances(std::string_view text);

// Canonical renderings. parse_guidelines(print_guidelines(s)) and
// parse_instances(print_instances(s)) are structurally equal to their
// inputs. Throw Error(kInvalidArgument) when the input breaks a type
// invariant that the notation cannot represent.
std::string print_guidelines(const Schema& schema);
std::string print_instances(const InstanceSet& set);

// Renders one value the way print_instances does.
std::string quote_string(std::string_view s);

// Dedents a raw docstring body: strips the first line's leading blanks, the
// common indentation of later lines, trailing blanks on every line, and
// leading/trailing empty lines.
std::string clean_docstring(std::string_view raw);

}  // namespace guidegen

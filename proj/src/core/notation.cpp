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

#include "guidegen/notation.hpp"

#include <algorithm>
#include <optional>
#include <unordered_set>

#include "guidegen/error.hpp"
#include "guidegen/text.hpp"

namespace guidegen {

const FieldDef* EntityClass::find_field(std::string_view field_name) const {
  for (const auto& f : fields) {
    if (f.name == field_name) return &f;
  }
  return nullptr;
}

const EntityClass* Schema::find_class(std::string_view class_name) const {
  for (const auto& c : classes) {
    if (c.name == class_name) return &c;
  }
  return nullptr;
}

const FieldValue* EntityInstance::find(std::string_view field_name) const {
  for (const auto& a : assignments) {
    if (a.field == field_name) return &a.value;
  }
  return nullptr;
}

bool same_structure(const Schema& a, const Schema& b) {
  return a.classes == b.classes;
}

bool same_structure(const EntityInstance& a, const EntityInstance& b) {
  return a.class_name == b.class_name && a.assignments == b.assignments;
}

bool same_structure(const InstanceSet& a, const InstanceSet& b) {
  if (a.doc_id != b.doc_id || a.instances.size() != b.instances.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    if (!same_structure(a.instances[i], b.instances[i])) return false;
  }
  return true;
}

namespace {

bool is_blank_char(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f'; }

bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

std::string_view rstrip(std::string_view s) {
  while (!s.empty() && is_blank_char(s.back())) s.remove_suffix(1);
  return s;
}

std::size_t indent_of(std::string_view line) {
  std::size_t n = 0;
  while (n < line.size() && (line[n] == ' ' || line[n] == '\t')) ++n;
  return n;
}

bool blank(std::string_view line) { return rstrip(line).size() == indent_of(line); }

struct Line {
  std::string_view text;  // without the line terminator
  std::size_t number;     // 1-based
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t start = 0;
  std::size_t number = 1;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back({line, number++});
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

// ---------------------------------------------------------------------------
// Guidelines

class GuidelineParser {
 public:
  explicit GuidelineParser(std::string_view text)
      : text_(text), lines_(split_lines(text)) {}

  Schema parse() {
    Schema schema;
    schema.source_text = std::string(text_);
    std::unordered_set<std::string> names;
    while (i_ < lines_.size()) {
      const Line& line = lines_[i_];
      const std::size_t ind = indent_of(line.text);
      std::string_view t = rstrip(line.text.substr(ind));
      if (t.empty() || t[0] == '#' || t[0] == '@' || t.starts_with("import ") ||
          t.starts_with("from ")) {
        ++i_;
        continue;
      }
      if (t.starts_with("class") && t.size() > 5 && is_blank_char(t[5])) {
        std::size_t name_col = 0;
        EntityClass cls = parse_class(&name_col);
        if (!names.insert(cls.name).second) {
          throw ParseError(line.number, name_col,
                           "duplicate class name '" + cls.name + "'");
        }
        schema.classes.push_back(std::move(cls));
        continue;
      }
      throw ParseError(line.number, ind + 1, "unexpected top-level statement");
    }
    if (schema.classes.empty()) throw ParseError(1, 1, "no classes found");
    return schema;
  }

 private:
  [[noreturn]] void fail(const Line& line, std::size_t col, const std::string& msg) {
    throw ParseError(line.number, col, msg);
  }

  // Everything after `pos` on the line must be blank or a comment.
  void expect_line_end(const Line& line, std::size_t pos) {
    while (pos < line.text.size() && is_blank_char(line.text[pos])) ++pos;
    if (pos < line.text.size() && line.text[pos] != '#') {
      fail(line, pos + 1, "unexpected text '" + std::string(line.text.substr(pos)) + "'");
    }
  }

  EntityClass parse_class(std::size_t* name_col) {
    const Line& header = lines_[i_];
    const std::size_t class_indent = indent_of(header.text);
    std::size_t pos = class_indent + 5;
    while (pos < header.text.size() && is_blank_char(header.text[pos])) ++pos;
    const std::size_t name_start = pos;
    if (pos >= header.text.size() || !ident_start(header.text[pos])) {
      fail(header, pos + 1, "expected class name");
    }
    while (pos < header.text.size() && ident_char(header.text[pos])) ++pos;
    EntityClass cls;
    cls.name = std::string(header.text.substr(name_start, pos - name_start));
    *name_col = name_start + 1;
    while (pos < header.text.size() && is_blank_char(header.text[pos])) ++pos;
    if (pos < header.text.size() && header.text[pos] == '(') {
      fail(header, pos + 1, "base classes are not supported");
    }
    if (pos >= header.text.size() || header.text[pos] != ':') {
      fail(header, pos + 1, "expected ':' after class name");
    }
    expect_line_end(header, pos + 1);
    ++i_;

    // Docstring: first non-blank line of the body.
    while (i_ < lines_.size() && blank(lines_[i_].text)) ++i_;
    if (i_ >= lines_.size() || indent_of(lines_[i_].text) <= class_indent) {
      fail(header, *name_col, "class '" + cls.name + "' without docstring");
    }
    const std::size_t body_indent = indent_of(lines_[i_].text);
    cls.guideline = parse_docstring(cls.name, body_indent);

    std::unordered_set<std::string> field_names;
    while (i_ < lines_.size()) {
      const Line& line = lines_[i_];
      if (blank(line.text)) {
        ++i_;
        continue;
      }
      const std::size_t ind = indent_of(line.text);
      if (ind <= class_indent) break;
      if (ind != body_indent) fail(line, ind + 1, "inconsistent indentation");
      if (line.text[ind] == '#') {
        ++i_;
        continue;
      }
      FieldDef field = parse_field(line, ind);
      if (!field_names.insert(field.name).second) {
        fail(line, ind + 1, "duplicate field '" + field.name + "' in class '" +
                                cls.name + "'");
      }
      cls.fields.push_back(std::move(field));
      ++i_;
    }
    if (cls.fields.empty()) {
      fail(header, *name_col, "empty class '" + cls.name + "': no fields");
    }
    return cls;
  }

  std::string parse_docstring(const std::string& class_name, std::size_t body_indent) {
    const Line& open = lines_[i_];
    std::string_view t = open.text.substr(body_indent);
    if (!t.starts_with("\"\"\"")) {
      fail(open, body_indent + 1, "class '" + class_name + "' without docstring");
    }
    std::string raw;
    std::size_t li = i_;
    std::size_t from = body_indent + 3;
    for (;;) {
      const Line& line = lines_[li];
      const std::size_t close = line.text.find("\"\"\"", from);
      if (close != std::string_view::npos) {
        raw.append(line.text.substr(from, close - from));
        expect_line_end(line, close + 3);
        break;
      }
      raw.append(line.text.substr(from));
      raw.push_back('\n');
      if (++li >= lines_.size()) {
        fail(open, body_indent + 1, "unterminated docstring");
      }
      from = 0;
    }
    i_ = li + 1;
    std::string cleaned = clean_docstring(raw);
    if (cleaned.empty()) {
      fail(open, body_indent + 1, "class '" + class_name + "' has an empty docstring");
    }
    return cleaned;
  }

  struct TypeCursor {
    std::string_view s;
    std::size_t pos;
    void skip() {
      while (pos < s.size() && is_blank_char(s[pos])) ++pos;
    }
    std::string_view ident() {
      skip();
      const std::size_t start = pos;
      while (pos < s.size() && ident_char(s[pos])) ++pos;
      return s.substr(start, pos - start);
    }
  };

  void parse_type(const Line& line, TypeCursor& cur, FieldDef& field) {
    cur.skip();
    const std::size_t start = cur.pos;
    const std::string_view name = cur.ident();
    auto expect = [&](char c) {
      cur.skip();
      if (cur.pos >= cur.s.size() || cur.s[cur.pos] != c) {
        fail(line, cur.pos + 1, std::string("expected '") + c + "' in type annotation");
      }
      ++cur.pos;
    };
    if (name == "str") {
      field.kind = FieldKind::kText;
    } else if (name == "List") {
      expect('[');
      const std::size_t inner_start = (cur.skip(), cur.pos);
      if (cur.ident() != "str") {
        fail(line, inner_start + 1, "unsupported field kind: only List[str] lists are allowed");
      }
      expect(']');
      field.kind = FieldKind::kTextList;
    } else if (name == "Optional") {
      expect('[');
      parse_type(line, cur, field);
      expect(']');
      field.required = false;
    } else if (name.empty()) {
      fail(line, start + 1, "field '" + field.name + "' without annotation");
    } else {
      // Report the whole spelled type, e.g. "int" or "Dict[str, str]".
      std::size_t end = cur.pos;
      while (end < cur.s.size() && cur.s[end] != '#' && cur.s[end] != '=') ++end;
      fail(line, start + 1,
           "unsupported field kind '" +
               std::string(rstrip(cur.s.substr(start, end - start))) + "'");
    }
  }

  FieldDef parse_field(const Line& line, std::size_t ind) {
    const std::string_view s = line.text;
    std::size_t pos = ind;
    if (!ident_start(s[pos])) fail(line, pos + 1, "unexpected statement in class body");
    while (pos < s.size() && ident_char(s[pos])) ++pos;
    FieldDef field;
    field.name = std::string(s.substr(ind, pos - ind));
    while (pos < s.size() && is_blank_char(s[pos])) ++pos;
    if (pos >= s.size() || s[pos] == '#' || s[pos] == '=') {
      fail(line, ind + 1, "field '" + field.name + "' without annotation");
    }
    if (s[pos] != ':') fail(line, pos + 1, "unexpected statement in class body");
    TypeCursor cur{s, pos + 1};
    parse_type(line, cur, field);
    cur.skip();
    if (cur.pos < s.size()) {
      if (s[cur.pos] == '=') fail(line, cur.pos + 1, "default values are not supported");
      if (s[cur.pos] != '#') {
        fail(line, cur.pos + 1, "unexpected text after annotation");
      }
      field.comment = std::string(trim(s.substr(cur.pos + 1)));
    }
    return field;
  }

  std::string_view text_;
  std::vector<Line> lines_;
  std::size_t i_ = 0;
};

// ---------------------------------------------------------------------------
// Instances

class LineIndex {
 public:
  explicit LineIndex(std::string_view text) {
    starts_.push_back(0);
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '\n') starts_.push_back(i + 1);
    }
  }

  ParseError error(std::size_t offset, const std::string& msg) const {
    auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
    const std::size_t line = static_cast<std::size_t>(it - starts_.begin());
    return ParseError(line, offset - starts_[line - 1] + 1, msg);
  }

 private:
  std::vector<std::size_t> starts_;
};

class InstanceParser {
 public:
  InstanceParser(std::string_view text, const LineIndex& index)
      : s_(text), index_(index) {}

  // Parses a list literal whose '[' is at `start`; returns the end offset.
  std::size_t parse_list(std::size_t start, std::vector<EntityInstance>& out) {
    pos_ = start + 1;
    skip();
    if (peek() == ']') return ++pos_;
    for (;;) {
      out.push_back(parse_call());
      skip();
      if (peek() == ',') {
        ++pos_;
        skip();
        if (peek() == ']') return ++pos_;
        continue;
      }
      if (peek() == ']') return ++pos_;
      if (at_end()) fail(start, "unterminated list");
      fail(pos_, "expected ',' or ']' between instances");
    }
  }

 private:
  [[noreturn]] void fail(std::size_t offset, const std::string& msg) const {
    throw index_.error(offset, msg);
  }

  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[pos_]; }

  void skip() {
    while (!at_end()) {
      const char c = s_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f') {
        ++pos_;
      } else if (c == '#') {
        while (!at_end() && s_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string ident() {
    const std::size_t start = pos_;
    while (!at_end() && ident_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string parse_string() {
    const std::size_t open = pos_;
    const char quote = s_[pos_++];
    std::string out;
    for (;;) {
      if (at_end() || s_[pos_] == '\n') fail(open, "unterminated string");
      const char c = s_[pos_++];
      if (c == quote) break;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (at_end()) fail(open, "unterminated string");
      const char e = s_[pos_++];
      switch (e) {
        case '\\': out.push_back('\\'); break;
        case '\'': out.push_back('\''); break;
        case '"': out.push_back('"'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        default:
          // Unknown escapes are kept verbatim.
          out.push_back('\\');
          out.push_back(e);
      }
    }
    return out;
  }

  // After a literal, only a separator or a closing bracket may follow.
  void expect_literal_end(char closer) {
    skip();
    const char c = peek();
    if (c == ',' || c == closer) return;
    if (at_end()) return;  // reported by the caller as unterminated
    fail(pos_, "non-literal value");
  }

  FieldValue parse_value() {
    skip();
    const char c = peek();
    if (c == '"' || c == '\'') {
      std::string v = parse_string();
      expect_literal_end(')');
      return v;
    }
    if (c == '[') {
      const std::size_t open = pos_++;
      std::vector<std::string> items;
      skip();
      if (peek() == ']') {
        ++pos_;
        expect_literal_end(')');
        return items;
      }
      for (;;) {
        skip();
        if (peek() != '"' && peek() != '\'') {
          if (at_end()) fail(open, "unterminated list value");
          fail(pos_, "non-literal value");
        }
        items.push_back(parse_string());
        expect_literal_end(']');
        if (peek() == ',') {
          ++pos_;
          skip();
          if (peek() == ']') break;
          continue;
        }
        if (peek() == ']') break;
        fail(open, "unterminated list value");
      }
      ++pos_;
      expect_literal_end(')');
      return items;
    }
    if (at_end()) fail(pos_, "unexpected end of input");
    fail(pos_, "non-literal value");
  }

  EntityInstance parse_call() {
    skip();
    EntityInstance inst;
    inst.source_offset = pos_;
    if (at_end()) fail(pos_, "unterminated list");
    if (!ident_start(peek())) fail(pos_, "expected an instance constructor call");
    inst.class_name = ident();
    skip();
    if (peek() != '(') fail(pos_, "expected '(' after '" + inst.class_name + "'");
    const std::size_t open = pos_++;
    skip();
    if (peek() == ')') {
      ++pos_;
      return inst;
    }
    std::unordered_set<std::string> seen;
    for (;;) {
      skip();
      const std::size_t kw_pos = pos_;
      if (!ident_start(peek())) {
        if (at_end()) fail(open, "unterminated call");
        fail(kw_pos, "positional argument; keyword form name=value required");
      }
      std::string key = ident();
      skip();
      if (peek() != '=' || (pos_ + 1 < s_.size() && s_[pos_ + 1] == '=')) {
        fail(kw_pos, "positional argument; keyword form name=value required");
      }
      ++pos_;
      if (!seen.insert(key).second) fail(kw_pos, "duplicate keyword '" + key + "'");
      FieldValue value = parse_value();
      inst.assignments.push_back({std::move(key), std::move(value)});
      skip();
      if (peek() == ',') {
        ++pos_;
        skip();
        if (peek() == ')') {
          ++pos_;
          return inst;
        }
        continue;
      }
      if (peek() == ')') {
        ++pos_;
        return inst;
      }
      if (at_end()) fail(open, "unterminated call");
      fail(pos_, "expected ',' or ')'");
    }
  }

  std::string_view s_;
  const LineIndex& index_;
  std::size_t pos_ = 0;
};

// End of the bracketed region opened at `start`, honoring single-line
// strings. Used to skip past a failed candidate list.
std::size_t bracket_extent(std::string_view s, std::size_t start) {
  int depth = 0;
  std::size_t i = start;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '"' || c == '\'') {
      ++i;
      while (i < s.size() && s[i] != c && s[i] != '\n') {
        if (s[i] == '\\') ++i;
        ++i;
      }
      ++i;
      continue;
    }
    if (c == '[') ++depth;
    if (c == ']' && --depth == 0) return i + 1;
    ++i;
  }
  return s.size();
}

void check_identifier(std::string_view what, std::string_view name) {
  if (!is_identifier(name)) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string(what) + " '" + std::string(name) + "' is not an identifier");
  }
}

}  // namespace

std::string clean_docstring(std::string_view raw) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  for (;;) {
    const std::size_t nl = raw.find('\n', start);
    lines.push_back(rstrip(raw.substr(start, nl == std::string_view::npos
                                                  ? std::string_view::npos
                                                  : nl - start)));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  std::size_t common = std::string_view::npos;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    common = std::min(common, indent_of(lines[i]));
  }
  lines[0].remove_prefix(indent_of(lines[0]));
  if (common != std::string_view::npos) {
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (!lines[i].empty()) lines[i].remove_prefix(common);
    }
  }
  std::size_t first = 0, last = lines.size();
  while (first < last && lines[first].empty()) ++first;
  while (last > first && lines[last - 1].empty()) --last;
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i > first) out.push_back('\n');
    out.append(lines[i]);
  }
  return out;
}

Schema parse_guidelines(std::string_view text) {
  return GuidelineParser(text).parse();
}

InstanceSet parse_instances(std::string_view text) {
  const LineIndex index(text);
  std::optional<ParseError> first_error;
  std::size_t pos = 0;
  while ((pos = text.find('[', pos)) != std::string_view::npos) {
    InstanceParser parser(text, index);
    InstanceSet set;
    try {
      const std::size_t end = parser.parse_list(pos, set.instances);
      set.source_text = std::string(text.substr(pos, end - pos));
      return set;
    } catch (const ParseError& e) {
      if (!first_error) first_error = e;
      pos = bracket_extent(text, pos);
    }
  }
  if (first_error) throw *first_error;
  throw ParseError(1, 1, "no list literal found");
}

std::string quote_string(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

std::string print_guidelines(const Schema& schema) {
  if (schema.classes.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "schema has no classes");
  }
  std::unordered_set<std::string> names;
  std::string out;
  for (const EntityClass& cls : schema.classes) {
    check_identifier("class name", cls.name);
    if (!names.insert(cls.name).second) {
      throw Error(ErrorKind::kInvalidArgument, "duplicate class name '" + cls.name + "'");
    }
    if (cls.guideline.empty() || clean_docstring(cls.guideline) != cls.guideline ||
        cls.guideline.find("\"\"\"") != std::string::npos || cls.guideline.back() == '"') {
      throw Error(ErrorKind::kInvalidArgument,
                  "class '" + cls.name + "' has a guideline that cannot be rendered as a docstring");
    }
    if (cls.fields.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "class '" + cls.name + "' has no fields");
    }
    if (!out.empty()) out += "\n";
    out += "@dataclass\nclass " + cls.name + ":\n    \"\"\"";
    for (char c : cls.guideline) {
      out.push_back(c);
      if (c == '\n') out += "    ";
    }
    out += "\"\"\"\n";
    std::unordered_set<std::string> fields;
    for (const FieldDef& f : cls.fields) {
      check_identifier("field name", f.name);
      if (!fields.insert(f.name).second) {
        throw Error(ErrorKind::kInvalidArgument,
                    "duplicate field '" + f.name + "' in class '" + cls.name + "'");
      }
      if (f.comment != trim(f.comment) || f.comment.find('\n') != std::string::npos) {
        throw Error(ErrorKind::kInvalidArgument,
                    "field '" + f.name + "' has a multi-line or untrimmed comment");
      }
      std::string type = f.kind == FieldKind::kText ? "str" : "List[str]";
      if (!f.required) type = "Optional[" + type + "]";
      out += "    " + f.name + ": " + type;
      if (!f.comment.empty()) out += "  # " + f.comment;
      out += "\n";
    }
  }
  return out;
}

std::string print_instances(const InstanceSet& set) {
  if (set.instances.empty()) return "[]";
  std::string out = "[\n";
  for (const EntityInstance& inst : set.instances) {
    check_identifier("class name", inst.class_name);
    out += "    " + inst.class_name + "(";
    std::unordered_set<std::string> keys;
    bool first = true;
    for (const Assignment& a : inst.assignments) {
      check_identifier("field name", a.field);
      if (!keys.insert(a.field).second) {
        throw Error(ErrorKind::kInvalidArgument, "duplicate keyword '" + a.field + "'");
      }
      if (!first) out += ", ";
      first = false;
      out += a.field + "=";
      if (const auto* s = std::get_if<std::string>(&a.value)) {
        out += quote_string(*s);
      } else {
        const auto& items = std::get<std::vector<std::string>>(a.value);
        out += "[";
        for (std::size_t i = 0; i < items.size(); ++i) {
          if (i) out += ", ";
          out += quote_string(items[i]);
        }
        out += "]";
      }
    }
    out += "),\n";
  }
  out += "]";
  return out;
}

}  // namespace guidegen

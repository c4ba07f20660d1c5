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

#include "guidegen/text.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <sstream>

#include "guidegen/error.hpp"

namespace guidegen {

std::size_t whitespace_at(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return 0;
  const auto b0 = static_cast<unsigned char>(s[pos]);
  switch (b0) {
    case ' ': case '\t': case '\n': case '\v': case '\f': case '\r':
      return 1;
    default:
      break;
  }
  if (b0 < 0xC2) return 0;
  auto byte = [&](std::size_t i) -> unsigned {
    return pos + i < s.size() ? static_cast<unsigned char>(s[pos + i]) : 0u;
  };
  if (b0 == 0xC2) {
    // U+0085 NEL, U+00A0 NBSP
    return (byte(1) == 0x85 || byte(1) == 0xA0) ? 2 : 0;
  }
  if (b0 == 0xE1) {
    // U+1680 OGHAM SPACE MARK
    return (byte(1) == 0x9A && byte(2) == 0x80) ? 3 : 0;
  }
  if (b0 == 0xE2) {
    const unsigned b1 = byte(1), b2 = byte(2);
    if (b1 == 0x80) {
      // U+2000..U+200A, U+2028, U+2029, U+202F
      if ((b2 >= 0x80 && b2 <= 0x8A) || b2 == 0xA8 || b2 == 0xA9 || b2 == 0xAF)
        return 3;
    } else if (b1 == 0x81 && b2 == 0x9F) {
      return 3;  // U+205F
    }
    return 0;
  }
  if (b0 == 0xE3) {
    return (byte(1) == 0x80 && byte(2) == 0x80) ? 3 : 0;  // U+3000
  }
  return 0;
}

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  std::size_t start = std::string_view::npos;
  while (i < text.size()) {
    const std::size_t ws = whitespace_at(text, i);
    if (ws > 0) {
      if (start != std::string_view::npos) {
        words.push_back(text.substr(start, i - start));
        start = std::string_view::npos;
      }
      i += ws;
    } else {
      if (start == std::string_view::npos) start = i;
      ++i;
    }
  }
  if (start != std::string_view::npos) words.push_back(text.substr(start));
  return words;
}

std::size_t count_words(std::string_view text) {
  return split_words(text).size();
}

std::string_view trim(std::string_view s) {
  std::size_t begin = 0;
  while (begin < s.size()) {
    const std::size_t ws = whitespace_at(s, begin);
    if (ws == 0) break;
    begin += ws;
  }
  // Scan forward to find the end of the last non-whitespace code point, since
  // multi-byte whitespace cannot be detected reliably from the back.
  std::size_t end = begin;
  std::size_t i = begin;
  while (i < s.size()) {
    const std::size_t ws = whitespace_at(s, i);
    if (ws > 0) {
      i += ws;
    } else {
      ++i;
      end = i;
    }
  }
  return s.substr(begin, end - begin);
}

std::string normalize_text(std::string_view s, bool case_fold,
                           bool collapse_whitespace) {
  std::string out;
  out.reserve(s.size());
  if (!collapse_whitespace) {
    for (char c : s) {
      out.push_back(case_fold && c >= 'A' && c <= 'Z' ? char(c - 'A' + 'a') : c);
    }
    return out;
  }
  bool first = true;
  for (std::string_view word : split_words(s)) {
    if (!first) out.push_back(' ');
    first = false;
    for (char c : word) {
      out.push_back(case_fold && c >= 'A' && c <= 'Z' ? char(c - 'A' + 'a') : c);
    }
  }
  return out;
}

std::string strip_code_fences(std::string_view text) {
  std::string_view t = trim(text);
  if (t.substr(0, 3) != "```") return std::string(t);
  const std::size_t first_nl = t.find('\n');
  if (first_nl == std::string_view::npos) return std::string(t);
  std::string_view body = t.substr(first_nl + 1);
  const std::size_t close = body.rfind("```");
  if (close != std::string_view::npos) body = body.substr(0, close);
  return std::string(trim(body));
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorKind::kRuntime, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto alpha = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  };
  if (!alpha(s[0])) return false;
  for (char c : s) {
    if (!alpha(c) && !(c >= '0' && c <= '9')) return false;
  }
  return true;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kNotFound, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::kIo, "error reading " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::kIo, "error writing " + path.string());
}

}  // namespace guidegen

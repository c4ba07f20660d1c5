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

// Small text and file helpers shared by all modules.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace guidegen {

// Length in bytes of the Unicode whitespace code point starting at s[pos],
// or 0 if there is none. Covers the White_Space property (ASCII blanks,
// NEL, NBSP, the U+2000 block, line/paragraph separators, ideographic space).
std::size_t whitespace_at(std::string_view s, std::size_t pos);

// Splits on runs of Unicode whitespace. Never yields empty tokens.
std::vector<std::string_view> split_words(std::string_view text);

std::size_t count_words(std::string_view text);

// Trims Unicode whitespace from both ends.
std::string_view trim(std::string_view s);

// Folds ASCII letters to lower case and/or collapses whitespace runs to a
// single space (trimming the ends).
std::string normalize_text(std::string_view s, bool case_fold,
                           bool collapse_whitespace);

// Removes a surrounding markdown code fence (```lang ... ```) if the trimmed
// text starts with one. Text without a fence is returned trimmed.
std::string strip_code_fences(std::string_view text);

std::string sha256_hex(std::string_view data);

bool is_identifier(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace guidegen

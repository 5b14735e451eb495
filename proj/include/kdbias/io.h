/*
 * Copyright 2026 The kdbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// File helpers: atomic writes, strict CSV tokenizing and number parsing.

#ifndef KDBIAS_IO_H_
#define KDBIAS_IO_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kdbias::io {

// Writes to "<path>.tmp.<pid>" then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

std::vector<std::string> split_lines(std::string_view text);
std::vector<std::string> split_csv_row(std::string_view line);

// Whole-string parses; return false on trailing garbage or overflow.
bool parse_int64(std::string_view s, int64_t* out);
bool parse_double(std::string_view s, double* out);

// Shortest round-trip representation ("%.17g" trimmed).
std::string format_double(double v);
// Fixed notation with `decimals` digits.
std::string format_fixed(double v, int decimals);

// Leading "# key=value" lines of a CSV body.
struct CommentedCsv {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> header;
  // (line number, fields)
  std::vector<std::pair<size_t, std::vector<std::string>>> rows;
};
CommentedCsv parse_commented_csv(std::string_view text);

}  // namespace kdbias::io

#endif  // KDBIAS_IO_H_

// Copyright 2026 The fisher-cpp Authors. All Rights Reserved.
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

#ifndef FISHER_CSV_HPP_
#define FISHER_CSV_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fisher {

using CsvRow = std::vector<std::string>;

/// RFC 4180: comma separated, fields optionally double-quoted, "" escapes a
/// quote inside a quoted field, CRLF or LF line ends. Blank lines are skipped.
std::vector<CsvRow> parse_csv(std::string_view text);

/// Quotes the field only when it contains a comma, quote, CR or LF.
std::string csv_field(std::string_view value);
std::string csv_line(const CsvRow& row);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);
/// Strict parse: the whole string must be a finite number.
double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);

std::string read_text_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate then write, creating
/// parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace fisher

#endif  // FISHER_CSV_HPP_

// Copyright 2026 The summae Authors.
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

#ifndef SUMMAE_CSV_HPP_
#define SUMMAE_CSV_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace summae::csv {

struct Record {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

// Parses delimiter-separated text. When quoting is enabled, fields follow
// RFC 4180: double-quoted fields may contain the delimiter, newlines and
// doubled quotes. Blank lines are skipped. Throws DataError on an
// unterminated quoted field.
std::vector<Record> parse(std::string_view text, char delimiter, bool quoting);

// Serializes one row, quoting fields that need it.
std::string format_row(const std::vector<std::string>& fields, char delimiter);

std::string read_file(const std::string& path);

}  // namespace summae::csv

#endif  // SUMMAE_CSV_HPP_

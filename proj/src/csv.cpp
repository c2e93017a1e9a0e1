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

#include "summae/csv.hpp"

#include <fstream>
#include <sstream>

#include "summae/error.hpp"

namespace summae::csv {

std::vector<Record> parse(std::string_view text, char delimiter, bool quoting) {
  std::vector<Record> out;
  // Strip a UTF-8 byte order mark.
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    Record rec;
    rec.line = line;
    std::string field;
    bool record_done = false;
    bool any_content = false;
    while (!record_done) {
      if (quoting && i < n && text[i] == '"') {
        any_content = true;
        ++i;
        bool closed = false;
        while (i < n) {
          const char c = text[i];
          if (c == '"') {
            if (i + 1 < n && text[i + 1] == '"') {
              field.push_back('"');
              i += 2;
              continue;
            }
            ++i;
            closed = true;
            break;
          }
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        if (!closed) {
          throw DataError("row " + std::to_string(rec.line) + ": unterminated quoted field");
        }
      }
      // Unquoted remainder of the field (or the whole field).
      while (i < n && text[i] != delimiter && text[i] != '\n' && text[i] != '\r') {
        field.push_back(text[i]);
        any_content = true;
        ++i;
      }
      rec.fields.push_back(std::move(field));
      field.clear();
      if (i < n && text[i] == delimiter) {
        any_content = true;
        ++i;
        continue;
      }
      // End of line or end of input.
      if (i < n && text[i] == '\r') ++i;
      if (i < n && text[i] == '\n') {
        ++i;
        ++line;
      }
      record_done = true;
    }
    if (any_content) out.push_back(std::move(rec));
  }
  return out;
}

std::string format_row(const std::vector<std::string>& fields, char delimiter) {
  std::string out;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out.push_back(delimiter);
    const std::string& f = fields[k];
    const bool needs_quotes = f.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string::npos;
    if (!needs_quotes) {
      out += f;
      continue;
    }
    out.push_back('"');
    for (char c : f) {
      if (c == '"') out.push_back('"');
      out.push_back(c);
    }
    out.push_back('"');
  }
  out.push_back('\n');
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace summae::csv

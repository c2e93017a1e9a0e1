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

#include "summae/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "summae/csv.hpp"
#include "summae/error.hpp"
#include "summae/random.hpp"

namespace summae {
namespace {

std::string trim(const std::string& s) {
  const auto is_space = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string row_prefix(std::size_t line) { return "row " + std::to_string(line) + ": "; }

}  // namespace

CorpusFormat parse_corpus_format(const std::string& name) {
  if (name == "csv" || name == "roc-csv") return CorpusFormat::kRocCsv;
  if (name == "tsv") return CorpusFormat::kTsv;
  throw ConfigError("unknown corpus format '" + name + "' (expected csv or tsv)");
}

std::vector<Story> parse_stories(const std::string& text, CorpusFormat format) {
  const bool csv = format == CorpusFormat::kRocCsv;
  auto records = csv::parse(text, csv ? ',' : '\t', csv);
  std::size_t first = 0;
  // ROCStories layout: id, title, five sentences.
  const std::size_t skip = csv ? 2 : 1;
  const std::size_t expected = skip + kSentencesPerStory;
  if (csv) {
    if (records.empty()) return {};
    if (records[0].fields.size() != expected) {
      throw DataError(row_prefix(records[0].line) + "wrong field count in header");
    }
    first = 1;
  }
  std::vector<Story> out;
  std::set<std::string> seen;
  for (std::size_t r = first; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != expected) {
      throw DataError(row_prefix(rec.line) + "wrong field count (expected " + std::to_string(expected) +
                      ", got " + std::to_string(rec.fields.size()) + ")");
    }
    Story s;
    s.id = trim(rec.fields[0]);
    if (s.id.empty()) throw DataError(row_prefix(rec.line) + "empty story id");
    if (!seen.insert(s.id).second) throw DataError(row_prefix(rec.line) + "duplicate id " + s.id);
    for (std::size_t k = skip; k < expected; ++k) {
      std::string sentence = trim(rec.fields[k]);
      if (sentence.empty()) {
        throw DataError(row_prefix(rec.line) + "empty sentence field " + std::to_string(k - skip + 1));
      }
      s.sentences.push_back(std::move(sentence));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Story> load_stories(const std::string& path, CorpusFormat format) {
  return parse_stories(csv::read_file(path), format);
}

std::string serialize_stories(const std::vector<Story>& stories, CorpusFormat format) {
  std::string out;
  if (format == CorpusFormat::kRocCsv) {
    out += "storyid,storytitle,sentence1,sentence2,sentence3,sentence4,sentence5\n";
    for (const auto& s : stories) {
      std::vector<std::string> row{s.id, ""};
      row.insert(row.end(), s.sentences.begin(), s.sentences.end());
      out += csv::format_row(row, ',');
    }
    return out;
  }
  for (const auto& s : stories) {
    out += s.id;
    for (const auto& sentence : s.sentences) out += "\t" + sentence;
    out += "\n";
  }
  return out;
}

CorpusSplit split_corpus(const std::vector<Story>& stories, std::array<double, 3> ratios,
                         std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0) || r > 1.0) throw ConfigError("split ratios must each lie in (0, 1]");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  if (stories.size() < 3) throw DataError("need at least 3 stories to populate train/valid/test");

  std::vector<std::size_t> order(stories.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return stories[a].id < stories[b].id; });
  Rng rng(seed);
  rng.shuffle(order);

  const auto n = static_cast<double>(stories.size());
  // The epsilon keeps exact products such as 0.95 * 100 from flooring to 94.
  const auto n_train = static_cast<std::size_t>(std::floor(ratios[0] * n + 1e-9));
  const auto n_valid = static_cast<std::size_t>(std::floor(ratios[1] * n + 1e-9));

  CorpusSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Story& s = stories[order[i]];
    if (i < n_train) {
      split.train.push_back(s);
    } else if (i < n_train + n_valid) {
      split.valid.push_back(s);
    } else {
      split.test.push_back(s);
    }
  }
  return split;
}

ReferenceMap parse_references(const std::string& text) {
  auto records = csv::parse(text, ',', true);
  ReferenceMap out;
  if (records.empty()) return out;
  const std::size_t width = records[0].fields.size();
  if (width < 2) throw DataError(row_prefix(records[0].line) + "header needs storyid and at least one summary");
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != width) {
      throw DataError(row_prefix(rec.line) + "missing summary field (expected " + std::to_string(width) +
                      " fields, got " + std::to_string(rec.fields.size()) + ")");
    }
    ReferenceSet set;
    set.story_id = trim(rec.fields[0]);
    for (std::size_t k = 1; k < width; ++k) {
      std::string summary = trim(rec.fields[k]);
      if (summary.empty()) throw DataError(row_prefix(rec.line) + "empty summary " + std::to_string(k));
      set.summaries.push_back(std::move(summary));
    }
    if (out.contains(set.story_id)) throw DataError(row_prefix(rec.line) + "duplicate story id " + set.story_id);
    out.emplace(set.story_id, std::move(set));
  }
  return out;
}

ReferenceMap load_references(const std::string& path) { return parse_references(csv::read_file(path)); }

std::string serialize_references(const ReferenceMap& refs) {
  std::size_t k = 0;
  for (const auto& [id, set] : refs) k = std::max(k, set.summaries.size());
  std::vector<std::string> header{"storyid"};
  for (std::size_t i = 1; i <= k; ++i) header.push_back("summary" + std::to_string(i));
  std::string out = csv::format_row(header, ',');
  for (const auto& [id, set] : refs) {
    std::vector<std::string> row{id};
    row.insert(row.end(), set.summaries.begin(), set.summaries.end());
    out += csv::format_row(row, ',');
  }
  return out;
}

std::vector<std::string> missing_references(const std::vector<Story>& stories, const ReferenceMap& refs) {
  std::vector<std::string> missing;
  for (const auto& s : stories)
    if (!refs.contains(s.id)) missing.push_back(s.id);
  return missing;
}

}  // namespace summae

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

#ifndef SUMMAE_CORPUS_HPP_
#define SUMMAE_CORPUS_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace summae {

/// A paragraph of ordered, pre-segmented sentences.
struct Story {
  std::string id;
  std::vector<std::string> sentences;

  bool operator==(const Story&) const = default;
};

struct CorpusSplit {
  std::vector<Story> train;
  std::vector<Story> valid;
  std::vector<Story> test;
};

/// Human reference summaries for one story.
struct ReferenceSet {
  std::string story_id;
  std::vector<std::string> summaries;

  bool operator==(const ReferenceSet&) const = default;
};

using ReferenceMap = std::map<std::string, ReferenceSet>;

enum class CorpusFormat {
  kRocCsv,  // header; storyid,storytitle,sentence1..sentence5
  kTsv,     // no header; id<TAB>s1<TAB>...<TAB>s5
};

inline constexpr std::size_t kSentencesPerStory = 5;

CorpusFormat parse_corpus_format(const std::string& name);

// Throws DataError naming the offending row.
std::vector<Story> load_stories(const std::string& path, CorpusFormat format);
std::vector<Story> parse_stories(const std::string& text, CorpusFormat format);
std::string serialize_stories(const std::vector<Story>& stories, CorpusFormat format);

// Shuffle-then-slice over ids sorted lexicographically. Train and valid
// sizes are floored; the remainder goes to test.
CorpusSplit split_corpus(const std::vector<Story>& stories, std::array<double, 3> ratios,
                         std::uint64_t seed);

ReferenceMap load_references(const std::string& path);
ReferenceMap parse_references(const std::string& text);
std::string serialize_references(const ReferenceMap& refs);

// Ids of stories with no references.
std::vector<std::string> missing_references(const std::vector<Story>& stories, const ReferenceMap& refs);

}  // namespace summae

#endif  // SUMMAE_CORPUS_HPP_

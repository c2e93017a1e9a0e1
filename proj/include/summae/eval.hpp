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

#ifndef SUMMAE_EVAL_HPP_
#define SUMMAE_EVAL_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "summae/corpus.hpp"
#include "summae/model.hpp"
#include "summae/subword.hpp"

namespace summae {

inline constexpr std::size_t kSummaryWordLimit = 20;

struct RougeScore {
  double r1_recall = 0.0;
  double rL_recall = 0.0;
};

// Lowercases and splits on runs of non-alphanumeric characters. An
// apostrophe between two word characters stays inside the token. Bytes
// >= 0x80 count as word characters.
std::vector<std::string> rouge_tokenize(std::string_view text);

// First sentence (up to and including the first '.', '!' or '?' followed by
// whitespace or end of text), then at most the first 20 words.
std::string truncate_summary(std::string_view text);

std::size_t count_sentences(std::string_view text);
std::size_t count_words(std::string_view text);

double rouge1_recall(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);
double rougeL_recall(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);
double rouge1_recall(std::string_view candidate, std::string_view reference);
double rougeL_recall(std::string_view candidate, std::string_view reference);
std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Truncates the candidate, then averages recall over the references.
RougeScore score_candidate(std::string_view candidate, const ReferenceSet& refs);

struct ExampleRecord {
  std::string story_id;
  std::string output;     // untruncated candidate
  std::string truncated;  // what was scored
  RougeScore score;
  std::size_t words = 0;            // whitespace tokens of the untruncated output
  std::size_t truncated_words = 0;  // whitespace tokens of the scored summary
  std::size_t sentences = 0;        // sentences in the untruncated output
};

struct EvalReport {
  std::string name;
  double rouge1 = 0.0;  // x100
  double rougeL = 0.0;  // x100
  double mean_words = 0.0;
  double mean_truncated_words = 0.0;
  double mean_sentences = 0.0;
  std::vector<ExampleRecord> examples;

  // One JSON object per example, then a summary row.
  std::string to_jsonl() const;
};

// Scores pre-computed candidates: one per story, in story order.
EvalReport score_candidates(const std::string& name, const std::vector<Story>& stories,
                            const std::vector<std::string>& candidates, const ReferenceMap& refs);

// Sentence i (1-based) of every story. Throws DataError for a story without
// references, std::invalid_argument for an index outside the stories.
EvalReport extract_baseline(const std::vector<Story>& stories, const ReferenceMap& refs, std::size_t index);

// Per story, the sentence with the best reference-averaged ROUGE-1 recall;
// ties go to the lowest index.
EvalReport extract_oracle(const std::vector<Story>& stories, const ReferenceMap& refs);

struct HumanBounds {
  EvalReport average;
  EvalReport maximum;
};

// Every ordered pair of distinct references per story, candidate side
// truncated. Requires at least two references per story.
HumanBounds human_bounds(const std::vector<Story>& stories, const ReferenceMap& refs);

// Greedy sentence-prompted summary of the clean paragraph encoding.
template <class T>
std::string summarize(const Params<T>& params, const Vocab& vocab, const EncodedStory& story);

template <class T>
EvalReport evaluate_model(const Params<T>& params, const Vocab& vocab, const std::vector<Story>& stories,
                          const ReferenceMap& refs);

struct LatentRecord {
  std::string story_id;
  SequenceKind kind = SequenceKind::kSentence;
  std::vector<double> z;
};

template <class T>
std::vector<LatentRecord> export_latents(const Params<T>& params, const Vocab& vocab,
                                         const std::vector<Story>& stories, std::size_t sample_size,
                                         std::uint64_t seed);

std::string latents_to_tsv(const std::vector<LatentRecord>& records);
std::vector<LatentRecord> latents_from_tsv(const std::string& text);

// Held-out accuracy of a logistic separator between sentence and paragraph
// latents: ~0.5 means merged clusters, ~1.0 segregated ones. Kinds are
// balanced by downsampling before a 70/30 split.
double segregation_probe(const std::vector<LatentRecord>& records, std::uint64_t seed = 0);

}  // namespace summae

#endif  // SUMMAE_EVAL_HPP_

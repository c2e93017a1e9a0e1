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

#ifndef SUMMAE_NOISING_HPP_
#define SUMMAE_NOISING_HPP_

#include <optional>
#include <string>
#include <vector>

#include "summae/corpus.hpp"
#include "summae/random.hpp"
#include "summae/subword.hpp"

namespace summae {

struct NoiseSpec {
  double p_select = 0.15;  // probability a sequence is chosen for masking
  double p_mask = 0.8;     // per-token mask probability within a chosen sequence
  double p_perm = 0.5;     // probability a paragraph's sentences are shuffled

  static NoiseSpec none() { return {0.0, 0.0, 0.0}; }
  void validate() const;
};

enum class SequenceKind { kSentence = 0, kParagraph = 1 };

struct NoisedExample {
  TokenSequence encoder_input;
  TokenSequence clean_target;  // EOS-terminated, never contains MASK
  SequenceKind kind = SequenceKind::kSentence;
};

/// A story tokenized once up front. The paragraph form joins sentences with
/// a single space, so sentence k > 0 inside a paragraph uses its
/// space-prefixed encoding.
struct EncodedStory {
  std::string id;
  std::vector<TokenSequence> sentences;         // encode(s_i)
  std::vector<TokenSequence> joined_sentences;  // encode(" " + s_i)

  std::size_t size() const { return sentences.size(); }
};

EncodedStory encode_story(const Story& story, const Vocab& vocab);

// Paragraph tokens for the given sentence order, followed by EOS.
TokenSequence paragraph_tokens(const EncodedStory& story, const std::vector<std::size_t>& order);
TokenSequence sentence_tokens(const EncodedStory& story, std::size_t index);

// With probability 1 - p_select returns seq unchanged; otherwise replaces
// each non-special token by MASK with probability p_mask.
TokenSequence mask_tokens(const TokenSequence& seq, const NoiseSpec& spec, Rng& rng);

// Uniform permutation of sentence indices with probability p_perm, else the
// identity. The flag reports whether a shuffle was drawn.
std::pair<std::vector<std::size_t>, bool> permutation_order(std::size_t n, const NoiseSpec& spec, Rng& rng);

std::pair<std::vector<std::string>, bool> permute_paragraph(const Story& story, const NoiseSpec& spec, Rng& rng);

// which = sentence index, or nullopt for the paragraph. Permutation is
// applied first, masking second.
NoisedExample make_training_example(const EncodedStory& story, std::optional<std::size_t> which,
                                    const NoiseSpec& spec, Rng& rng);
NoisedExample make_training_example(const Story& story, std::optional<std::size_t> which, const NoiseSpec& spec,
                                    const Vocab& vocab, Rng& rng);

}  // namespace summae

#endif  // SUMMAE_NOISING_HPP_

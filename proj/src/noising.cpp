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

#include "summae/noising.hpp"

#include <numeric>
#include <stdexcept>

#include "summae/error.hpp"

namespace summae {

void NoiseSpec::validate() const {
  for (double p : {p_select, p_mask, p_perm}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("noise probabilities must lie in [0, 1]");
  }
}

EncodedStory encode_story(const Story& story, const Vocab& vocab) {
  EncodedStory out;
  out.id = story.id;
  for (const auto& s : story.sentences) {
    out.sentences.push_back(vocab.encode(s));
    out.joined_sentences.push_back(vocab.encode(" " + s));
  }
  return out;
}

TokenSequence paragraph_tokens(const EncodedStory& story, const std::vector<std::size_t>& order) {
  TokenSequence out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& part = k == 0 ? story.sentences.at(order[k]) : story.joined_sentences.at(order[k]);
    out.insert(out.end(), part.begin(), part.end());
  }
  out.push_back(kEos);
  return out;
}

TokenSequence sentence_tokens(const EncodedStory& story, std::size_t index) {
  TokenSequence out = story.sentences.at(index);
  out.push_back(kEos);
  return out;
}

TokenSequence mask_tokens(const TokenSequence& seq, const NoiseSpec& spec, Rng& rng) {
  TokenSequence out = seq;
  if (!rng.bernoulli(spec.p_select)) return out;
  for (int& t : out) {
    if (t < kNumSpecials) continue;
    if (rng.bernoulli(spec.p_mask)) t = kMask;
  }
  return out;
}

std::pair<std::vector<std::size_t>, bool> permutation_order(std::size_t n, const NoiseSpec& spec, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (!rng.bernoulli(spec.p_perm)) return {order, false};
  rng.shuffle(order);
  return {order, true};
}

std::pair<std::vector<std::string>, bool> permute_paragraph(const Story& story, const NoiseSpec& spec, Rng& rng) {
  if (story.sentences.size() < 2) throw std::invalid_argument("permute_paragraph: need at least 2 sentences");
  auto [order, permuted] = permutation_order(story.sentences.size(), spec, rng);
  std::vector<std::string> out;
  for (std::size_t i : order) out.push_back(story.sentences[i]);
  return {out, permuted};
}

NoisedExample make_training_example(const EncodedStory& story, std::optional<std::size_t> which,
                                    const NoiseSpec& spec, Rng& rng) {
  NoisedExample ex;
  if (which) {
    if (*which >= story.size()) throw std::out_of_range("sentence index out of range");
    ex.kind = SequenceKind::kSentence;
    ex.clean_target = sentence_tokens(story, *which);
    ex.encoder_input = mask_tokens(ex.clean_target, spec, rng);
    return ex;
  }
  ex.kind = SequenceKind::kParagraph;
  std::vector<std::size_t> identity(story.size());
  std::iota(identity.begin(), identity.end(), 0);
  ex.clean_target = paragraph_tokens(story, identity);
  auto [order, permuted] = permutation_order(story.size(), spec, rng);
  ex.encoder_input = mask_tokens(permuted ? paragraph_tokens(story, order) : ex.clean_target, spec, rng);
  return ex;
}

NoisedExample make_training_example(const Story& story, std::optional<std::size_t> which, const NoiseSpec& spec,
                                    const Vocab& vocab, Rng& rng) {
  return make_training_example(encode_story(story, vocab), which, spec, rng);
}

}  // namespace summae

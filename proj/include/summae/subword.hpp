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

#ifndef SUMMAE_SUBWORD_HPP_
#define SUMMAE_SUBWORD_HPP_

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "summae/corpus.hpp"

namespace summae {

using TokenSequence = std::vector<int>;

/// Reserved ids. BOS_S / BOS_P prompt the decoder for a sentence or a
/// paragraph; CLS is the pooling position of the Transformer encoder.
enum SpecialToken : int {
  kPad = 0,
  kEos = 1,
  kMask = 2,
  kBosSentence = 3,
  kBosParagraph = 4,
  kCls = 5,
};
inline constexpr int kNumSpecials = 6;
inline constexpr int kFirstByteId = kNumSpecials;
inline constexpr int kFirstMergeId = kFirstByteId + 256;

/// Byte-level subword vocabulary built by greedy frequent-pair merging.
///
/// Layout: the six specials, then one piece per byte value (so any input
/// can be encoded), then learned merges in the order they were learned,
/// then unused padding slots up to the requested size.
class Vocab {
 public:
  static constexpr const char* kAlgorithm = "bpe-bytes";

  int size() const { return static_cast<int>(pieces_.size()); }
  int num_merges() const { return num_merges_; }

  // Empty for specials and padding slots.
  const std::string& piece(int id) const { return pieces_.at(static_cast<std::size_t>(id)); }
  bool is_reserved(int id) const { return id < kFirstByteId || id >= kFirstMergeId + num_merges_; }

  // Id of a learned or byte piece, or -1.
  int find(std::string_view piece) const;

  TokenSequence encode(std::string_view text) const;
  // Throws std::out_of_range on an id outside [0, size()).
  std::string decode(const TokenSequence& ids) const;

  void save(const std::string& path) const;
  std::string serialize() const;
  static Vocab load(const std::string& path);
  static Vocab parse(const std::string& text);

  bool operator==(const Vocab& o) const { return pieces_ == o.pieces_ && num_merges_ == o.num_merges_; }

 private:
  friend Vocab train_vocab(const std::vector<Story>&, int);
  void rebuild_index();
  void encode_chunk(std::string_view chunk, TokenSequence& out) const;

  std::vector<std::string> pieces_;
  int num_merges_ = 0;
  std::unordered_map<std::string, int> index_;
};

// Deterministic for a given corpus and size. Throws ConfigError if
// target_size cannot hold the specials plus the byte alphabet, DataError on
// an empty corpus.
Vocab train_vocab(const std::vector<Story>& corpus, int target_size);

// Splits text into merge domains: an optional whitespace prefix followed by
// a run of word characters or a run of punctuation.
std::vector<std::string_view> pretokenize(std::string_view text);

TokenSequence encode_text(const Vocab& vocab, std::string_view text);
std::string decode_tokens(const Vocab& vocab, const TokenSequence& seq);

}  // namespace summae

#endif  // SUMMAE_SUBWORD_HPP_

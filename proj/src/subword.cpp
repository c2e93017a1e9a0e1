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

#include "summae/subword.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "summae/csv.hpp"
#include "summae/error.hpp"

namespace summae {
namespace {

constexpr const char* kSpecialNames[kNumSpecials] = {"<pad>", "<eos>", "<mask>", "<bos_s>", "<bos_p>", "<cls>"};
constexpr const char* kUnusedName = "<unused>";

enum class CharClass { kSpace, kWord, kOther };

CharClass classify(unsigned char c) {
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') return CharClass::kSpace;
  if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '\'' || c >= 0x80)
    return CharClass::kWord;
  return CharClass::kOther;
}

// Length of a complete UTF-8 sequence starting at s[i], or 0 if invalid.
std::size_t utf8_length(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  std::size_t len = 0;
  if (c < 0x80) return 1;
  if ((c & 0xE0) == 0xC0 && c >= 0xC2) len = 2;
  else if ((c & 0xF0) == 0xE0) len = 3;
  else if ((c & 0xF8) == 0xF0 && c <= 0xF4) len = 4;
  else return 0;
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k)
    if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return 0;
  return len;
}

// One piece per line: whitespace, backslash, control bytes, broken UTF-8
// and a leading '<' are escaped so reserved lines stay unambiguous.
std::string escape_piece(std::string_view p) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (std::size_t i = 0; i < p.size();) {
    const auto c = static_cast<unsigned char>(p[i]);
    const std::size_t len = utf8_length(p, i);
    const bool plain = len > 1 || (len == 1 && c > 0x20 && c != 0x7F && c != '\\' && !(i == 0 && c == '<'));
    if (plain) {
      out.append(p.substr(i, len));
      i += len;
      continue;
    }
    out += "\\x";
    out.push_back(hex[c >> 4]);
    out.push_back(hex[c & 15]);
    ++i;
  }
  return out;
}

std::string unescape_piece(std::string_view line) {
  std::string out;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] != '\\') {
      out.push_back(line[i]);
      continue;
    }
    if (i + 3 >= line.size() || line[i + 1] != 'x') throw DataError("vocab: bad escape in piece");
    out.push_back(static_cast<char>(std::stoi(std::string(line.substr(i + 2, 2)), nullptr, 16)));
    i += 3;
  }
  return out;
}

}  // namespace

std::vector<std::string_view> pretokenize(std::string_view text) {
  std::vector<std::string_view> chunks;
  std::size_t start = 0;
  bool has_content = false;
  CharClass last = CharClass::kSpace;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const CharClass c = classify(static_cast<unsigned char>(text[i]));
    if (c == CharClass::kSpace) {
      if (has_content) {
        chunks.push_back(text.substr(start, i - start));
        start = i;
        has_content = false;
      }
      continue;
    }
    if (has_content && c != last) {
      chunks.push_back(text.substr(start, i - start));
      start = i;
    }
    has_content = true;
    last = c;
  }
  if (start < text.size()) chunks.push_back(text.substr(start));
  return chunks;
}

int Vocab::find(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  return it == index_.end() ? -1 : it->second;
}

void Vocab::rebuild_index() {
  index_.clear();
  for (int id = kFirstByteId; id < kFirstMergeId + num_merges_; ++id) index_.emplace(pieces_[id], id);
}

void Vocab::encode_chunk(std::string_view chunk, TokenSequence& out) const {
  std::vector<std::string> sym;
  std::vector<int> ids;
  sym.reserve(chunk.size());
  for (char c : chunk) {
    sym.emplace_back(1, c);
    ids.push_back(kFirstByteId + static_cast<unsigned char>(c));
  }
  // Repeatedly merge the adjacent pair whose concatenation is the earliest
  // learned piece.
  while (sym.size() > 1) {
    int best = -1;
    std::size_t best_pos = 0;
    for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
      auto it = index_.find(sym[i] + sym[i + 1]);
      if (it != index_.end() && it->second >= kFirstMergeId && (best < 0 || it->second < best)) {
        best = it->second;
        best_pos = i;
      }
    }
    if (best < 0) break;
    sym[best_pos] += sym[best_pos + 1];
    ids[best_pos] = best;
    sym.erase(sym.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
  }
  out.insert(out.end(), ids.begin(), ids.end());
}

TokenSequence Vocab::encode(std::string_view text) const {
  TokenSequence out;
  for (auto chunk : pretokenize(text)) encode_chunk(chunk, out);
  return out;
}

std::string Vocab::decode(const TokenSequence& ids) const {
  std::string out;
  for (int id : ids) {
    if (id < 0 || id >= size()) throw std::out_of_range("token id " + std::to_string(id) + " out of range");
    if (!is_reserved(id)) out += pieces_[static_cast<std::size_t>(id)];
  }
  return out;
}

std::string Vocab::serialize() const {
  std::ostringstream os;
  os << "summae-vocab v1 size=" << size() << " algo=" << kAlgorithm << "\n";
  for (int id = 0; id < size(); ++id) {
    if (id < kNumSpecials) {
      os << kSpecialNames[id] << "\n";
    } else if (is_reserved(id)) {
      os << kUnusedName << "\n";
    } else {
      os << escape_piece(pieces_[static_cast<std::size_t>(id)]) << "\n";
    }
  }
  return os.str();
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << serialize();
}

Vocab Vocab::parse(const std::string& text) {
  std::istringstream is(text);
  std::string header;
  std::getline(is, header);
  int declared = -1;
  std::string algo;
  {
    std::istringstream hs(header);
    std::string magic, version, size_kv, algo_kv;
    hs >> magic >> version >> size_kv >> algo_kv;
    if (magic != "summae-vocab" || version != "v1" || size_kv.rfind("size=", 0) != 0 ||
        algo_kv.rfind("algo=", 0) != 0) {
      throw DataError("vocab: bad header '" + header + "'");
    }
    declared = std::stoi(size_kv.substr(5));
    algo = algo_kv.substr(5);
  }
  if (algo != kAlgorithm) throw DataError("vocab: unsupported algorithm " + algo);

  Vocab v;
  std::string line;
  int id = 0;
  bool in_padding = false;
  while (std::getline(is, line)) {
    if (id < kNumSpecials) {
      if (line != kSpecialNames[id]) throw DataError("vocab: expected special " + std::string(kSpecialNames[id]));
      v.pieces_.emplace_back();
    } else if (line == kUnusedName) {
      in_padding = true;
      v.pieces_.emplace_back();
    } else {
      if (in_padding) throw DataError("vocab: piece after padding at line " + std::to_string(id + 2));
      std::string piece = unescape_piece(line);
      if (id < kFirstMergeId && piece != std::string(1, static_cast<char>(id - kFirstByteId))) {
        throw DataError("vocab: byte piece mismatch at id " + std::to_string(id));
      }
      if (id >= kFirstMergeId) ++v.num_merges_;
      v.pieces_.push_back(std::move(piece));
    }
    ++id;
  }
  if (id != declared) throw DataError("vocab: header declares " + std::to_string(declared) + " pieces, found " +
                                      std::to_string(id));
  if (id < kFirstMergeId) throw DataError("vocab: missing byte pieces");
  v.rebuild_index();
  return v;
}

Vocab Vocab::load(const std::string& path) { return parse(csv::read_file(path)); }

Vocab train_vocab(const std::vector<Story>& corpus, int target_size) {
  if (target_size < kFirstMergeId) {
    throw ConfigError("vocab size " + std::to_string(target_size) + " cannot hold " +
                      std::to_string(kFirstMergeId) + " specials and byte pieces");
  }
  // Word types and their counts. std::map keeps iteration order stable.
  std::map<std::string, long> counts;
  for (const auto& story : corpus)
    for (const auto& s : story.sentences)
      for (auto chunk : pretokenize(s)) ++counts[std::string(chunk)];
  if (counts.empty()) throw DataError("cannot train a vocabulary on an empty corpus");

  Vocab v;
  v.pieces_.assign(kNumSpecials, std::string());
  for (int b = 0; b < 256; ++b) v.pieces_.emplace_back(1, static_cast<char>(b));
  v.rebuild_index();

  struct Word {
    std::vector<int> sym;
    long freq;
  };
  std::vector<Word> words;
  for (const auto& [text, freq] : counts) {
    Word w{{}, freq};
    for (char c : text) w.sym.push_back(kFirstByteId + static_cast<unsigned char>(c));
    words.push_back(std::move(w));
  }

  using Pair = std::pair<int, int>;
  std::map<Pair, long> pair_count;
  std::map<Pair, std::set<std::size_t>> where;
  auto add_pairs = [&](std::size_t wi, long sign) {
    const auto& w = words[wi];
    for (std::size_t i = 0; i + 1 < w.sym.size(); ++i) {
      const Pair p{w.sym[i], w.sym[i + 1]};
      pair_count[p] += sign * w.freq;
      if (sign > 0) where[p].insert(wi);
    }
  };
  for (std::size_t wi = 0; wi < words.size(); ++wi) add_pairs(wi, +1);

  // Max-heap on count; ties go to the smallest pair for determinism.
  using Entry = std::tuple<long, int, int>;
  auto cmp = [](const Entry& a, const Entry& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    return std::make_pair(std::get<1>(a), std::get<2>(a)) > std::make_pair(std::get<1>(b), std::get<2>(b));
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
  for (const auto& [p, c] : pair_count) heap.emplace(c, p.first, p.second);

  while (v.size() < target_size && !heap.empty()) {
    auto [c, a, b] = heap.top();
    heap.pop();
    auto it = pair_count.find({a, b});
    if (it == pair_count.end() || it->second != c) continue;  // stale
    if (c < 2) break;

    std::string merged = v.pieces_[static_cast<std::size_t>(a)] + v.pieces_[static_cast<std::size_t>(b)];
    int new_id = v.find(merged);
    if (new_id < 0) {
      new_id = v.size();
      v.pieces_.push_back(merged);
      ++v.num_merges_;
      v.index_.emplace(merged, new_id);
    }

    const std::set<std::size_t> affected = where[{a, b}];
    std::set<Pair> touched;
    for (std::size_t wi : affected) {
      auto& sym = words[wi].sym;
      bool present = false;
      for (std::size_t i = 0; i + 1 < sym.size(); ++i)
        if (sym[i] == a && sym[i + 1] == b) present = true;
      if (!present) continue;
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) touched.insert({sym[i], sym[i + 1]});
      add_pairs(wi, -1);
      std::vector<int> next;
      for (std::size_t i = 0; i < sym.size(); ++i) {
        if (i + 1 < sym.size() && sym[i] == a && sym[i + 1] == b) {
          next.push_back(new_id);
          ++i;
        } else {
          next.push_back(sym[i]);
        }
      }
      sym = std::move(next);
      add_pairs(wi, +1);
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) touched.insert({sym[i], sym[i + 1]});
    }
    pair_count[{a, b}] = 0;
    for (const auto& p : touched) {
      const long cnt = pair_count[p];
      if (cnt > 0) heap.emplace(cnt, p.first, p.second);
    }
  }
  while (v.size() < target_size) v.pieces_.emplace_back();
  return v;
}

TokenSequence encode_text(const Vocab& vocab, std::string_view text) { return vocab.encode(text); }
std::string decode_tokens(const Vocab& vocab, const TokenSequence& seq) { return vocab.decode(seq); }

}  // namespace summae

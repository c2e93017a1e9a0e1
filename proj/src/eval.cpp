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

#include "summae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "summae/error.hpp"
#include "summae/random.hpp"

namespace summae {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

// End offset (exclusive) of the first sentence, or npos when the text has
// no terminator followed by whitespace or end of text.
std::size_t first_sentence_end(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_terminator(text[i]) && (i + 1 == text.size() || is_space(static_cast<unsigned char>(text[i + 1])))) {
      return i + 1;
    }
  }
  return std::string_view::npos;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double round1(double v) { return std::round(v * 10.0) / 10.0; }

const ReferenceSet& refs_for(const ReferenceMap& refs, const std::string& id) {
  auto it = refs.find(id);
  if (it == refs.end()) throw DataError("no references for story " + id);
  if (it->second.summaries.empty()) throw DataError("empty reference set for story " + id);
  return it->second;
}

ExampleRecord make_record(const std::string& id, std::string output, const ReferenceSet& refs) {
  ExampleRecord rec;
  rec.story_id = id;
  rec.truncated = truncate_summary(output);
  rec.score = score_candidate(output, refs);
  rec.words = count_words(output);
  rec.truncated_words = count_words(rec.truncated);
  rec.sentences = count_sentences(output);
  rec.output = std::move(output);
  return rec;
}

void finalize(EvalReport& report) {
  const auto n = static_cast<double>(report.examples.size());
  if (report.examples.empty()) return;
  double r1 = 0, rl = 0, w = 0, tw = 0, s = 0;
  for (const auto& e : report.examples) {
    r1 += e.score.r1_recall;
    rl += e.score.rL_recall;
    w += static_cast<double>(e.words);
    tw += static_cast<double>(e.truncated_words);
    s += static_cast<double>(e.sentences);
  }
  report.rouge1 = 100.0 * r1 / n;
  report.rougeL = 100.0 * rl / n;
  report.mean_words = w / n;
  report.mean_truncated_words = tw / n;
  report.mean_sentences = s / n;
}

}  // namespace

std::vector<std::string> rouge_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_word_byte(c)) {
      cur.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
      continue;
    }
    if (c == '\'' && !cur.empty() && i + 1 < text.size() && is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
      cur.push_back('\'');
      continue;
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string truncate_summary(std::string_view text) {
  text = trim(text);
  const std::size_t end = first_sentence_end(text);
  if (end != std::string_view::npos) text = text.substr(0, end);
  // Word cap: keep the original spacing up to the end of word 20.
  std::size_t words = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i == text.size()) break;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (++words == kSummaryWordLimit) {
      text = text.substr(0, i);
      break;
    }
  }
  return std::string(trim(text));
}

std::size_t count_sentences(std::string_view text) {
  std::size_t n = 0;
  text = trim(text);
  while (!text.empty()) {
    ++n;
    const std::size_t end = first_sentence_end(text);
    if (end == std::string_view::npos) break;
    text = trim(text.substr(end));
  }
  return n;
}

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = is_space(static_cast<unsigned char>(c));
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

double rouge1_recall(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  if (reference.empty()) return 0.0;
  std::map<std::string_view, long> ref_counts;
  for (const auto& t : reference) ++ref_counts[t];
  long overlap = 0;
  for (const auto& t : candidate) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return static_cast<double>(overlap) / static_cast<double>(reference.size());
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rougeL_recall(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  if (reference.empty()) return 0.0;
  return static_cast<double>(lcs_length(candidate, reference)) / static_cast<double>(reference.size());
}

double rouge1_recall(std::string_view candidate, std::string_view reference) {
  return rouge1_recall(rouge_tokenize(candidate), rouge_tokenize(reference));
}

double rougeL_recall(std::string_view candidate, std::string_view reference) {
  return rougeL_recall(rouge_tokenize(candidate), rouge_tokenize(reference));
}

RougeScore score_candidate(std::string_view candidate, const ReferenceSet& refs) {
  if (refs.summaries.empty()) throw std::invalid_argument("score_candidate: empty reference set");
  const auto cand = rouge_tokenize(truncate_summary(candidate));
  RougeScore s;
  for (const auto& r : refs.summaries) {
    const auto ref = rouge_tokenize(r);
    s.r1_recall += rouge1_recall(cand, ref);
    s.rL_recall += rougeL_recall(cand, ref);
  }
  const auto k = static_cast<double>(refs.summaries.size());
  s.r1_recall /= k;
  s.rL_recall /= k;
  return s;
}

std::string EvalReport::to_jsonl() const {
  std::string out;
  for (const auto& e : examples) {
    nlohmann::json j = {
        {"storyid", e.story_id},
        {"summary", e.truncated},
        {"output", e.output},
        {"rouge1", round1(100.0 * e.score.r1_recall)},
        {"rougeL", round1(100.0 * e.score.rL_recall)},
        {"num_words", e.words},
        {"num_sentences", e.sentences},
    };
    // Byte-level decoding can emit invalid UTF-8; replace rather than fail.
    out += j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
  }
  nlohmann::json summary = {
      {"summary_row", name},
      {"examples", examples.size()},
      {"rouge1", round1(rouge1)},
      {"rougeL", round1(rougeL)},
      {"num_words", round1(mean_words)},
      {"num_words_truncated", round1(mean_truncated_words)},
      {"num_sentences", round1(mean_sentences)},
  };
  out += summary.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
  return out;
}

EvalReport score_candidates(const std::string& name, const std::vector<Story>& stories,
                            const std::vector<std::string>& candidates, const ReferenceMap& refs) {
  if (candidates.size() != stories.size()) throw std::invalid_argument("one candidate per story required");
  EvalReport report;
  report.name = name;
  for (std::size_t i = 0; i < stories.size(); ++i) {
    report.examples.push_back(make_record(stories[i].id, candidates[i], refs_for(refs, stories[i].id)));
  }
  finalize(report);
  return report;
}

EvalReport extract_baseline(const std::vector<Story>& stories, const ReferenceMap& refs, std::size_t index) {
  if (index < 1 || index > kSentencesPerStory) {
    throw std::invalid_argument("extract index must lie in [1, " + std::to_string(kSentencesPerStory) + "]");
  }
  std::vector<std::string> candidates;
  for (const auto& s : stories) {
    if (index > s.sentences.size()) throw std::invalid_argument("story " + s.id + " has too few sentences");
    candidates.push_back(s.sentences[index - 1]);
  }
  return score_candidates("extract_" + std::to_string(index), stories, candidates, refs);
}

EvalReport extract_oracle(const std::vector<Story>& stories, const ReferenceMap& refs) {
  EvalReport report;
  report.name = "extract_oracle";
  for (const auto& s : stories) {
    const auto& r = refs_for(refs, s.id);
    std::size_t best = 0;
    double best_r1 = -1.0;
    for (std::size_t i = 0; i < s.sentences.size(); ++i) {
      const double r1 = score_candidate(s.sentences[i], r).r1_recall;
      if (r1 > best_r1) {
        best_r1 = r1;
        best = i;
      }
    }
    report.examples.push_back(make_record(s.id, s.sentences[best], r));
  }
  finalize(report);
  return report;
}

HumanBounds human_bounds(const std::vector<Story>& stories, const ReferenceMap& refs) {
  HumanBounds hb;
  hb.average.name = "human_average";
  hb.maximum.name = "human_maximum";
  for (const auto& s : stories) {
    const auto& r = refs_for(refs, s.id);
    const std::size_t k = r.summaries.size();
    if (k < 2) throw DataError("story " + s.id + " needs at least 2 references for human bounds");
    RougeScore sum, mx;
    std::size_t pairs = 0;
    double words = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      words += static_cast<double>(count_words(r.summaries[i]));
      const auto cand = rouge_tokenize(truncate_summary(r.summaries[i]));
      for (std::size_t j = 0; j < k; ++j) {
        if (i == j) continue;
        const auto ref = rouge_tokenize(r.summaries[j]);
        const double r1 = rouge1_recall(cand, ref);
        const double rl = rougeL_recall(cand, ref);
        sum.r1_recall += r1;
        sum.rL_recall += rl;
        mx.r1_recall = std::max(mx.r1_recall, r1);
        mx.rL_recall = std::max(mx.rL_recall, rl);
        ++pairs;
      }
    }
    ExampleRecord avg;
    avg.story_id = s.id;
    avg.output = r.summaries[0];
    avg.truncated = truncate_summary(r.summaries[0]);
    avg.score = {sum.r1_recall / static_cast<double>(pairs), sum.rL_recall / static_cast<double>(pairs)};
    avg.words = static_cast<std::size_t>(std::lround(words / static_cast<double>(k)));
    avg.truncated_words = avg.words;
    avg.sentences = 1;
    ExampleRecord best = avg;
    best.score = mx;
    hb.average.examples.push_back(std::move(avg));
    hb.maximum.examples.push_back(std::move(best));
  }
  finalize(hb.average);
  finalize(hb.maximum);
  return hb;
}

template <class T>
std::string summarize(const Params<T>& params, const Vocab& vocab, const EncodedStory& story) {
  std::vector<std::size_t> order(story.size());
  std::iota(order.begin(), order.end(), 0);
  const auto z = encode(params, paragraph_tokens(story, order));
  return vocab.decode(decode_greedy(params, z, SequenceKind::kSentence));
}

template <class T>
EvalReport evaluate_model(const Params<T>& params, const Vocab& vocab, const std::vector<Story>& stories,
                          const ReferenceMap& refs) {
  std::vector<std::string> outputs(stories.size());
  const long n = static_cast<long>(stories.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto& s = stories[static_cast<std::size_t>(i)];
    outputs[static_cast<std::size_t>(i)] = summarize(params, vocab, encode_story(s, vocab));
  }
  return score_candidates("model", stories, outputs, refs);
}

template <class T>
std::vector<LatentRecord> export_latents(const Params<T>& params, const Vocab& vocab,
                                         const std::vector<Story>& stories, std::size_t sample_size,
                                         std::uint64_t seed) {
  if (sample_size > stories.size()) throw std::invalid_argument("sample size exceeds available stories");
  std::vector<std::size_t> idx(stories.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(sample_size);
  std::vector<std::vector<LatentRecord>> per_story(sample_size);
  const long n = static_cast<long>(sample_size);
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < n; ++k) {
    const auto& s = stories[idx[static_cast<std::size_t>(k)]];
    const EncodedStory es = encode_story(s, vocab);
    auto& out = per_story[static_cast<std::size_t>(k)];
    std::vector<std::size_t> order(es.size());
    std::iota(order.begin(), order.end(), 0);
    auto zp = encode(params, paragraph_tokens(es, order));
    out.push_back({s.id, SequenceKind::kParagraph, std::vector<double>(zp.begin(), zp.end())});
    for (std::size_t i = 0; i < es.size(); ++i) {
      auto zs = encode(params, sentence_tokens(es, i));
      out.push_back({s.id, SequenceKind::kSentence, std::vector<double>(zs.begin(), zs.end())});
    }
  }
  std::vector<LatentRecord> records;
  for (auto& v : per_story)
    for (auto& r : v) records.push_back(std::move(r));
  return records;
}

std::string latents_to_tsv(const std::vector<LatentRecord>& records) {
  std::string out = "id\tkind";
  const std::size_t dim = records.empty() ? 0 : records[0].z.size();
  for (std::size_t i = 0; i < dim; ++i) out += "\tz" + std::to_string(i);
  out += "\n";
  char buf[32];
  for (const auto& r : records) {
    out += r.story_id;
    out += r.kind == SequenceKind::kSentence ? "\tS" : "\tP";
    for (double v : r.z) {
      std::snprintf(buf, sizeof buf, "\t%.9g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::vector<LatentRecord> latents_from_tsv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  if (line.rfind("id\tkind", 0) != 0) throw DataError("latents: bad header");
  std::vector<LatentRecord> out;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    LatentRecord r;
    std::string kind, field;
    std::getline(ls, r.story_id, '\t');
    std::getline(ls, kind, '\t');
    if (kind != "S" && kind != "P") throw DataError("latents: row " + std::to_string(row) + ": bad kind");
    r.kind = kind == "S" ? SequenceKind::kSentence : SequenceKind::kParagraph;
    while (std::getline(ls, field, '\t')) r.z.push_back(std::stod(field));
    out.push_back(std::move(r));
  }
  return out;
}

double segregation_probe(const std::vector<LatentRecord>& records, std::uint64_t seed) {
  std::vector<std::size_t> sent, para;
  for (std::size_t i = 0; i < records.size(); ++i)
    (records[i].kind == SequenceKind::kSentence ? sent : para).push_back(i);
  if (sent.empty() || para.empty()) throw std::invalid_argument("segregation_probe: need both kinds of latents");
  Rng rng(seed);
  rng.shuffle(sent);
  rng.shuffle(para);
  const std::size_t per_kind = std::min(sent.size(), para.size());
  sent.resize(per_kind);
  para.resize(per_kind);

  // 70/30 split within each kind keeps both halves balanced.
  const std::size_t n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(0.7 * per_kind)));
  std::vector<std::pair<std::size_t, double>> train, test;
  for (std::size_t k = 0; k < per_kind; ++k) {
    auto& dst = k < n_train ? train : test;
    dst.emplace_back(sent[k], 0.0);
    dst.emplace_back(para[k], 1.0);
  }
  if (test.empty()) test = train;

  const std::size_t dim = records[0].z.size();
  // Standardize with training statistics.
  std::vector<double> mean(dim, 0.0), inv_sd(dim, 1.0);
  for (const auto& [i, y] : train)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += records[i].z[d];
  for (auto& m : mean) m /= static_cast<double>(train.size());
  for (std::size_t d = 0; d < dim; ++d) {
    double v = 0.0;
    for (const auto& [i, y] : train) v += (records[i].z[d] - mean[d]) * (records[i].z[d] - mean[d]);
    v /= static_cast<double>(train.size());
    inv_sd[d] = v > 1e-12 ? 1.0 / std::sqrt(v) : 0.0;
  }
  auto feature = [&](std::size_t i, std::size_t d) { return (records[i].z[d] - mean[d]) * inv_sd[d]; };

  // L2-regularized logistic regression by full-batch gradient descent.
  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  const double lr = 0.5, l2 = 1e-3;
  const int iters = 300;
  std::vector<double> gw(dim);
  for (int it = 0; it < iters; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (const auto& [i, y] : train) {
      double logit = b;
      for (std::size_t d = 0; d < dim; ++d) logit += w[d] * feature(i, d);
      const double p = 1.0 / (1.0 + std::exp(-logit));
      const double err = p - y;
      for (std::size_t d = 0; d < dim; ++d) gw[d] += err * feature(i, d);
      gb += err;
    }
    const double inv = 1.0 / static_cast<double>(train.size());
    for (std::size_t d = 0; d < dim; ++d) w[d] -= lr * (gw[d] * inv + l2 * w[d]);
    b -= lr * gb * inv;
  }
  std::size_t correct = 0;
  for (const auto& [i, y] : test) {
    double logit = b;
    for (std::size_t d = 0; d < dim; ++d) logit += w[d] * feature(i, d);
    if ((logit > 0.0) == (y > 0.5)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

template std::string summarize<float>(const Params<float>&, const Vocab&, const EncodedStory&);
template std::string summarize<double>(const Params<double>&, const Vocab&, const EncodedStory&);
template EvalReport evaluate_model<float>(const Params<float>&, const Vocab&, const std::vector<Story>&,
                                          const ReferenceMap&);
template EvalReport evaluate_model<double>(const Params<double>&, const Vocab&, const std::vector<Story>&,
                                           const ReferenceMap&);
template std::vector<LatentRecord> export_latents<float>(const Params<float>&, const Vocab&,
                                                         const std::vector<Story>&, std::size_t, std::uint64_t);
template std::vector<LatentRecord> export_latents<double>(const Params<double>&, const Vocab&,
                                                          const std::vector<Story>&, std::size_t, std::uint64_t);

}  // namespace summae

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

#include <cmath>

#include "doctest.h"
#include "summae/error.hpp"
#include "summae/eval.hpp"
#include "summae/random.hpp"
#include "synthetic.hpp"

using namespace summae;

namespace {

// Clipped unigram overlap by explicit matching: each candidate token claims
// one unused equal reference token.
double oracle_rouge1(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (ref.empty()) return 0.0;
  std::vector<bool> used(ref.size(), false);
  std::size_t hits = 0;
  for (const auto& c : cand) {
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (!used[j] && ref[j] == c) {
        used[j] = true;
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(ref.size());
}

bool is_subsequence(const std::vector<std::string>& sub, const std::vector<std::string>& seq) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < seq.size() && j < sub.size(); ++i)
    if (seq[i] == sub[j]) ++j;
  return j == sub.size();
}

// Longest common subsequence by enumerating every subsequence of the
// candidate.
std::size_t oracle_lcs(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  std::size_t best = 0;
  const std::size_t n = cand.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    const auto bits = static_cast<std::size_t>(std::popcount(mask));
    if (bits <= best) continue;
    std::vector<std::string> sub;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) sub.push_back(cand[i]);
    if (is_subsequence(sub, ref)) best = bits;
  }
  return best;
}

std::vector<std::string> random_tokens(Rng& rng, std::size_t max_len) {
  static const char* kWords[] = {"a", "b", "c", "d", "e", "f"};
  std::vector<std::string> out(rng.uniform_index(max_len + 1));
  for (auto& w : out) w = kWords[rng.uniform_index(6)];
  return out;
}

Story story(const std::string& id, std::vector<std::string> s) { return {id, std::move(s)}; }

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("tokenizer lowercases and keeps intra-word apostrophes") {
    CHECK(rouge_tokenize("He wasn't HOME, 'really'!") ==
          std::vector<std::string>{"he", "wasn't", "home", "really"});
    CHECK(rouge_tokenize("").empty());
    CHECK(rouge_tokenize("x-ray 42") == std::vector<std::string>{"x", "ray", "42"});
  }

  TEST_CASE("truncation keeps the first sentence and at most 20 words") {
    CHECK(truncate_summary("A b. C d.") == "A b.");
    CHECK(truncate_summary("") == "");
    CHECK(truncate_summary("Mr.Smith left. Then") == "Mr.Smith left.");
    std::string long_sentence;
    std::string first20;
    for (int i = 1; i <= 25; ++i) {
      long_sentence += (i > 1 ? " w" : "w") + std::to_string(i);
      if (i == 20) first20 = long_sentence;
    }
    CHECK(truncate_summary(long_sentence + ".") == first20);
    CHECK(count_words(truncate_summary(long_sentence)) == 20);
  }

  TEST_CASE("sentence and word counts") {
    CHECK(count_sentences("One. Two! Three") == 3);
    CHECK(count_sentences("") == 0);
    CHECK(count_sentences("No terminator") == 1);
    CHECK(count_words("  a b\tc\n") == 3);
  }

  TEST_CASE("rouge-1 of the cat example follows clipped counting") {
    const auto cand = rouge_tokenize("the cat sat");
    const auto ref = rouge_tokenize("the cat sat on the mat");
    const double expected = oracle_rouge1(cand, ref);
    CHECK(expected == doctest::Approx(0.5));
    CHECK(rouge1_recall("the cat sat", "the cat sat on the mat") == expected);
  }

  TEST_CASE("rouge boundary cases") {
    CHECK(rouge1_recall("a b c", "a b c") == 1.0);
    CHECK(rougeL_recall("a b c", "a b c") == 1.0);
    CHECK(rouge1_recall("a b", "c d") == 0.0);
    CHECK(rouge1_recall("a", "") == 0.0);
    CHECK(rougeL_recall("", "a b") == 0.0);
    CHECK(rougeL_recall("a c d", "a b c d") == doctest::Approx(0.75));
    CHECK(oracle_lcs(rouge_tokenize("a c d"), rouge_tokenize("a b c d")) == 3);
  }

  TEST_CASE("rouge matches brute-force oracles on random sequences") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
      const auto cand = random_tokens(rng, 12);
      const auto ref = random_tokens(rng, 12);
      CHECK(rouge1_recall(cand, ref) == oracle_rouge1(cand, ref));
      const std::size_t lcs = oracle_lcs(cand, ref);
      CHECK(lcs_length(cand, ref) == lcs);
      CHECK(rougeL_recall(cand, ref) == (ref.empty() ? 0.0 : static_cast<double>(lcs) / ref.size()));
      CHECK(lcs <= std::min(cand.size(), ref.size()));
    }
  }

  TEST_CASE("scores against several references are averaged") {
    ReferenceSet same{"x", {"the dog ran", "the dog ran", "the dog ran"}};
    ReferenceSet one{"x", {"the dog ran"}};
    auto a = score_candidate("a dog ran far", same);
    auto b = score_candidate("a dog ran far", one);
    CHECK(a.r1_recall == b.r1_recall);
    CHECK(a.rL_recall == b.rL_recall);

    ReferenceSet three{"x", {"tom bought milk", "tom went to the store", "milk was bought by tom"}};
    auto s = score_candidate("tom bought milk", three);
    double r1 = 0;
    const auto cand = rouge_tokenize("tom bought milk");
    for (const auto& r : three.summaries) r1 += oracle_rouge1(cand, rouge_tokenize(r));
    CHECK(s.r1_recall == doctest::Approx(r1 / 3));
    CHECK(s.r1_recall == doctest::Approx((1.0 + 1.0 / 5 + 3.0 / 5) / 3));

    auto empty = score_candidate("", three);
    CHECK(empty.r1_recall == 0.0);
    CHECK(empty.rL_recall == 0.0);
    CHECK_THROWS(score_candidate("x", ReferenceSet{"x", {}}));
  }

  TEST_CASE("candidates are truncated before scoring") {
    ReferenceSet refs{"x", {"alpha beta"}};
    CHECK(score_candidate("alpha. beta", refs).r1_recall == doctest::Approx(0.5));
  }

  const std::vector<Story> kStories{
      story("s1", {"Tom went out.", "He bought milk.", "It was cold.", "He went home.", "Tom was happy."}),
      story("s2", {"Ann sang.", "The crowd cheered.", "She bowed.", "Ann left.", "Everyone went home."}),
  };
  const ReferenceMap kRefs{
      {"s1", {"s1", {"Tom bought milk.", "Tom went to buy milk.", "Tom was happy after buying milk."}}},
      {"s2", {"s2", {"Ann sang and the crowd cheered.", "Ann sang well.", "The crowd loved Ann."}}},
  };

  TEST_CASE("extractive baselines and oracle dominance") {
    std::vector<EvalReport> extracts;
    for (std::size_t i = 1; i <= 5; ++i) extracts.push_back(extract_baseline(kStories, kRefs, i));
    CHECK_THROWS_AS(extract_baseline(kStories, kRefs, 0), std::invalid_argument);
    CHECK_THROWS_AS(extract_baseline(kStories, kRefs, 6), std::invalid_argument);
    auto oracle = extract_oracle(kStories, kRefs);
    for (const auto& e : extracts) {
      CHECK(oracle.rouge1 >= e.rouge1);
      for (std::size_t k = 0; k < kStories.size(); ++k)
        CHECK(oracle.examples[k].score.r1_recall >= e.examples[k].score.r1_recall);
    }
    CHECK(oracle.examples[0].output == "He bought milk.");
    // Extract_i by hand for the first story.
    CHECK(extracts[1].examples[0].score.r1_recall == doctest::Approx(score_candidate("He bought milk.", kRefs.at("s1")).r1_recall));
  }

  TEST_CASE("oracle ties go to the first sentence") {
    std::vector<Story> s{story("t", {"zz", "yy", "xx", "ww", "vv"})};
    ReferenceMap r{{"t", {"t", {"unrelated words"}}}};
    CHECK(extract_oracle(s, r).examples[0].output == "zz");
  }

  TEST_CASE("missing references are data errors") {
    ReferenceMap partial{{"s1", kRefs.at("s1")}};
    CHECK_THROWS_AS(extract_baseline(kStories, partial, 1), DataError);
  }

  TEST_CASE("human bounds") {
    auto hb = human_bounds(kStories, kRefs);
    CHECK(hb.maximum.rouge1 >= hb.average.rouge1);
    CHECK(hb.maximum.rougeL >= hb.average.rougeL);
    for (std::size_t k = 0; k < kStories.size(); ++k)
      CHECK(hb.maximum.examples[k].score.r1_recall >= hb.average.examples[k].score.r1_recall);

    // Average over ordered pairs, by hand for story s1.
    const auto& r = kRefs.at("s1").summaries;
    double sum = 0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        if (i != j) sum += oracle_rouge1(rouge_tokenize(truncate_summary(r[i])), rouge_tokenize(r[j]));
    CHECK(hb.average.examples[0].score.r1_recall == doctest::Approx(sum / 6));

    ReferenceMap same{{"s1", {"s1", {"a b c.", "a b c.", "a b c."}}}};
    auto hs = human_bounds({kStories[0]}, same);
    CHECK(hs.average.rouge1 == doctest::Approx(100.0));
    CHECK(hs.maximum.rougeL == doctest::Approx(100.0));
    ReferenceMap single{{"s1", {"s1", {"a b c."}}}};
    CHECK_THROWS_AS(human_bounds({kStories[0]}, single), DataError);
  }

  TEST_CASE("report json lines") {
    auto rep = extract_baseline(kStories, kRefs, 1);
    const std::string jsonl = rep.to_jsonl();
    CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 3);
    CHECK(jsonl.find("\"storyid\":\"s1\"") != std::string::npos);
    CHECK(jsonl.find("\"summary_row\":\"extract_1\"") != std::string::npos);

    // An untrained byte-level model can emit broken UTF-8.
    auto odd = score_candidates("odd", kStories, {"Tom \xA5 milk", "\xC3"}, kRefs);
    CHECK_NOTHROW(odd.to_jsonl());
  }

  TEST_CASE("score_candidates matches extract_baseline when copying sentence 1") {
    std::vector<std::string> firsts;
    for (const auto& s : kStories) firsts.push_back(s.sentences[0]);
    auto a = score_candidates("copy", kStories, firsts, kRefs);
    auto b = extract_baseline(kStories, kRefs, 1);
    CHECK(a.rouge1 == b.rouge1);
    CHECK(a.rougeL == b.rougeL);
    auto empty = score_candidates("empty", kStories, {"", ""}, kRefs);
    CHECK(empty.rouge1 == 0.0);
    CHECK(empty.mean_words == 0.0);
  }

  TEST_CASE("latent tsv round trip") {
    std::vector<LatentRecord> recs{{"a", SequenceKind::kParagraph, {0.1, -2.5e-7, 3.0}},
                                   {"a", SequenceKind::kSentence, {1.0 / 3, 2.0, -0.0}}};
    const std::string tsv = latents_to_tsv(recs);
    CHECK(tsv.rfind("id\tkind\tz0\tz1\tz2\n", 0) == 0);
    auto back = latents_from_tsv(tsv);
    REQUIRE(back.size() == 2);
    CHECK(back[1].kind == SequenceKind::kSentence);
    CHECK(back[1].z[0] == doctest::Approx(1.0 / 3).epsilon(1e-8));
    CHECK(back[0].z[1] == doctest::Approx(-2.5e-7));
  }

  std::vector<LatentRecord> gaussian_records(double separation, std::uint64_t seed, bool shuffle_labels = false) {
    Rng rng(seed);
    std::vector<LatentRecord> out;
    for (int i = 0; i < 400; ++i) {
      const bool para = i % 2 == 0;
      LatentRecord r{std::to_string(i), para ? SequenceKind::kParagraph : SequenceKind::kSentence, {}};
      for (int d = 0; d < 8; ++d) r.z.push_back(rng.normal() + (para && d == 0 ? separation : 0.0));
      out.push_back(std::move(r));
    }
    if (shuffle_labels) {
      std::vector<SequenceKind> kinds;
      for (const auto& r : out) kinds.push_back(r.kind);
      rng.shuffle(kinds);
      for (std::size_t i = 0; i < out.size(); ++i) out[i].kind = kinds[i];
    }
    return out;
  }

  TEST_CASE("segregation probe separates far clusters and not identical ones") {
    CHECK(segregation_probe(gaussian_records(10.0, 1)) > 0.95);
    double mixed = 0;
    for (std::uint64_t s = 0; s < 10; ++s) mixed += segregation_probe(gaussian_records(0.0, s), s);
    CHECK(std::abs(mixed / 10 - 0.5) < 0.05);
    double shuffled = 0;
    for (std::uint64_t s = 0; s < 10; ++s) shuffled += segregation_probe(gaussian_records(10.0, s, true), s);
    CHECK(std::abs(shuffled / 10 - 0.5) < 0.05);
    auto only = gaussian_records(1.0, 1);
    for (auto& r : only) r.kind = SequenceKind::kSentence;
    CHECK_THROWS(segregation_probe(only));
  }

  TEST_CASE("latent export counts, determinism and finiteness") {
    auto corpus = summae::testing::make_synthetic_corpus(30, 3);
    Vocab v = train_vocab(corpus.stories, 300);
    ModelConfig cfg;
    cfg.vocab_size = v.size();
    cfg.emb_dim = 8;
    cfg.h_dim = 8;
    cfg.z_dim = 4;
    auto params = init_params<float>(cfg, 1);
    auto recs = export_latents(params, v, corpus.stories, 10, 5);
    CHECK(recs.size() == 60);
    CHECK(std::count_if(recs.begin(), recs.end(), [](auto& r) { return r.kind == SequenceKind::kParagraph; }) == 10);
    auto again = export_latents(params, v, corpus.stories, 10, 5);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(recs[i].story_id == again[i].story_id);
      CHECK(recs[i].z == again[i].z);
      for (double x : recs[i].z) CHECK(std::isfinite(x));
    }
    CHECK_THROWS(export_latents(params, v, corpus.stories, 31, 5));
  }

  TEST_CASE("model evaluation is deterministic and uses the sentence prompt") {
    auto corpus = summae::testing::make_synthetic_corpus(12, 4);
    Vocab v = train_vocab(corpus.stories, 300);
    ModelConfig cfg;
    cfg.vocab_size = v.size();
    cfg.emb_dim = 8;
    cfg.h_dim = 8;
    cfg.z_dim = 4;
    cfg.max_len_sentence = 6;
    auto params = init_params<float>(cfg, 2);
    auto a = evaluate_model(params, v, corpus.stories, corpus.references);
    auto b = evaluate_model(params, v, corpus.stories, corpus.references);
    REQUIRE(a.examples.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(a.examples[i].output == b.examples[i].output);
      const EncodedStory es = encode_story(corpus.stories[i], v);
      auto z = encode(params, paragraph_tokens(es, {0, 1, 2, 3, 4}));
      CHECK(a.examples[i].output == v.decode(decode_greedy(params, z, SequenceKind::kSentence)));
    }
  }
}

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


// Acceptance harness. Prints one PASS, FAIL or SKIP line per criterion,
// followed by indented detail lines. Exit status: 0 when nothing failed,
// 1 on any failure, 77 when every selected criterion was skipped.

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "gradcheck.hpp"
#include "summae/checkpoint.hpp"
#include "summae/corpus.hpp"
#include "summae/eval.hpp"
#include "summae/model.hpp"
#include "summae/noising.hpp"
#include "summae/objectives.hpp"
#include "summae/run_config.hpp"
#include "summae/subword.hpp"
#include "summae/trainer.hpp"
#include "synthetic.hpp"

using namespace summae;
namespace fs = std::filesystem;

namespace {

enum class Verdict { kPass, kFail, kSkip };

struct Outcome {
  Verdict verdict = Verdict::kPass;
  std::vector<std::string> details;

  void note(const char* fmt, ...) __attribute__((format(printf, 2, 3))) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    details.emplace_back(buf);
  }
  // Records a check; any false check fails the criterion.
  bool expect(bool ok, const std::string& what) {
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    if (!ok && verdict != Verdict::kSkip) verdict = Verdict::kFail;
    return ok;
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// ---- 1: extractive and human baselines --------------------------------------

struct Options {
  std::string roc_stories;
  std::string roc_references;
  int seeds = 3;
};

constexpr double kBaselineTol = 1.0;
constexpr double kHumanTol = 1.5;

Outcome criterion_baselines(const Options& opt) {
  Outcome out;
  if (opt.roc_stories.empty() || opt.roc_references.empty()) {
    out.verdict = Verdict::kSkip;
    out.note("needs the released test stories and references: pass --roc-stories and --roc-references");
    out.note("or set SUMMAE_ROC_TEST_STORIES and SUMMAE_ROC_TEST_REFERENCES");
    return out;
  }
  const auto stories = load_stories(opt.roc_stories, CorpusFormat::kRocCsv);
  const auto refs = load_references(opt.roc_references);
  std::vector<Story> scored;
  for (const auto& s : stories)
    if (refs.count(s.id)) scored.push_back(s);
  out.note("%zu stories with references", scored.size());

  const double r1[] = {27.3, 19.5, 19.4, 20.5, 24.6};
  const double rl[] = {24.8, 16.7, 16.4, 17.7, 20.9};
  for (std::size_t i = 1; i <= 5; ++i) {
    const auto rep = extract_baseline(scored, refs, i);
    out.expect(std::abs(rep.rouge1 - r1[i - 1]) <= kBaselineTol && std::abs(rep.rougeL - rl[i - 1]) <= kBaselineTol,
               fmt("Extract_%.0f R1 %.1f (paper %.1f) RL %.1f", double(i), rep.rouge1, r1[i - 1], rep.rougeL) +
                   fmt(" (paper %.1f)", rl[i - 1]));
  }
  const auto oracle = extract_oracle(scored, refs);
  out.expect(std::abs(oracle.rouge1 - 36.7) <= kBaselineTol && std::abs(oracle.rougeL - 31.9) <= kBaselineTol,
             fmt("Extract Oracle R1 %.1f (paper 36.7) RL %.1f (paper 31.9)", oracle.rouge1, oracle.rougeL));
  const auto hb = human_bounds(scored, refs);
  out.expect(std::abs(hb.average.rouge1 - 45.0) <= kHumanTol && std::abs(hb.average.rougeL - 37.7) <= kHumanTol,
             fmt("Human average R1 %.1f (paper 45.0) RL %.1f (paper 37.7)", hb.average.rouge1, hb.average.rougeL));
  out.expect(std::abs(hb.maximum.rouge1 - 52.7) <= kHumanTol && std::abs(hb.maximum.rougeL - 44.1) <= kHumanTol,
             fmt("Human maximum R1 %.1f (paper 52.7) RL %.1f (paper 44.1)", hb.maximum.rouge1, hb.maximum.rougeL));
  return out;
}

// ---- 2: ROUGE against brute-force oracles -----------------------------------

// Clipped unigram matches by explicit pairing: each candidate token claims
// one unused equal reference token.
double oracle_rouge1(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (ref.empty()) return 0.0;
  std::vector<bool> used(ref.size(), false);
  std::size_t hits = 0;
  for (const auto& c : cand)
    for (std::size_t j = 0; j < ref.size(); ++j)
      if (!used[j] && ref[j] == c) {
        used[j] = true;
        ++hits;
        break;
      }
  return static_cast<double>(hits) / static_cast<double>(ref.size());
}

// Longest common subsequence by enumerating every subsequence of the
// shorter side (length <= 12, so at most 4096 masks).
double oracle_rougeL(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (ref.empty()) return 0.0;
  const bool cand_short = cand.size() <= ref.size();
  const auto& a = cand_short ? cand : ref;
  const auto& b = cand_short ? ref : cand;
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    const auto len = static_cast<std::size_t>(std::popcount(mask));
    if (len <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      if (!(mask >> i & 1u)) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      ++j;
    }
    if (ok) best = len;
  }
  return static_cast<double>(best) / static_cast<double>(ref.size());
}

Outcome criterion_rouge() {
  Outcome out;
  const char* words[] = {"the", "cat", "sat", "on", "mat", "a", "dog"};
  Rng rng(20260);
  auto draw = [&] {
    std::vector<std::string> s(rng.uniform_index(13));
    for (auto& w : s) w = words[rng.uniform_index(7)];
    return s;
  };
  std::size_t r1_bad = 0, rl_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto c = draw();
    auto r = draw();
    if (r.empty()) r.push_back("the");
    r1_bad += rouge1_recall(c, r) != oracle_rouge1(c, r);
    rl_bad += rougeL_recall(c, r) != oracle_rougeL(c, r);
  }
  out.expect(r1_bad == 0, fmt("ROUGE-1 recall: %.0f of 1000 pairs differ from the pairing oracle", double(r1_bad)));
  out.expect(rl_bad == 0, fmt("ROUGE-L recall: %.0f of 1000 pairs differ from the subsequence oracle", double(rl_bad)));
  return out;
}

// ---- 3: gradients against finite differences --------------------------------

using testing::check_gradient;
using testing::check_gradients;
using testing::GradCheck;
using testing::kFdTolerance;

ModelConfig toy(NetKind enc, NetKind dec) {
  ModelConfig c;
  c.encoder = enc;
  c.decoder = dec;
  c.vocab_size = 16;
  c.emb_dim = 8;
  c.h_dim = 8;
  c.z_dim = 8;
  c.trf_layers = 1;
  c.trf_heads = 2;
  c.trf_ff = 8;
  c.max_len_sentence = 8;
  c.max_len_paragraph = 16;
  return c;
}

Matrix<double> row_of(const std::vector<double>& v) {
  Matrix<double> m(1, v.size());
  m.data = v;
  return m;
}

std::vector<double> toy_latent(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> z(8);
  for (auto& x : z) x = 0.5 * rng.normal();
  return z;
}

Outcome criterion_gradients() {
  Outcome out;
  const std::pair<NetKind, NetKind> archs[] = {{NetKind::kRnn, NetKind::kRnn},
                                               {NetKind::kTransformer, NetKind::kRnn},
                                               {NetKind::kRnn, NetKind::kTransformer},
                                               {NetKind::kTransformer, NetKind::kTransformer}};
  std::map<std::string, GradCheck> by_objective;
  const TokenSequence sent_a{6, 9, 12, kEos}, sent_b{10, 7, kEos}, para{6, 9, 12, 10, 7, 15, kEos};

  for (auto [enc, dec] : archs) {
    auto params = init_params<double>(toy(enc, dec), 31);

    // teacher_forced_nll: every parameter group and z, both prompts.
    for (auto prompt : {SequenceKind::kSentence, SequenceKind::kParagraph}) {
      const auto z = toy_latent(32);
      auto grads = params.tensors.zeros_like();
      const auto res = teacher_forced_nll(params, z, prompt, para, &grads);
      GradCheck gc = check_gradients(params.tensors, grads,
                                     [&] { return teacher_forced_nll<double>(params, z, prompt, para).loss; });
      Matrix<double> zv = row_of(z);
      gc.merge(check_gradient("z", zv, row_of(res.z_grad),
                              [&] { return teacher_forced_nll<double>(params, zv.data, prompt, para).loss; }));
      by_objective["teacher_forced_nll"].merge(gc);
    }

    // nssp_loss: encoder parameters (z is internal to the objective).
    for (int label : {0, 1}) {
      auto run = [&](TensorSet<double>* g) {
        ModelGraph<double> mg(params, g, g != nullptr);
        Var l = nssp_loss(mg, sent_a, sent_b, label);
        if (g) mg.graph().backward(l);
        return mg.graph().scalar(l);
      };
      auto grads = params.tensors.zeros_like();
      run(&grads);
      by_objective["nssp_loss"].merge(check_gradients(params.tensors, grads, [&] { return run(nullptr); }));
    }

    // cpp_loss: encoder, logistic head, and a free latent.
    auto head = LogisticHead<double>::init(8);
    head.tensors[0].data = toy_latent(33);
    head.tensors[1].data = {0.1};
    for (int label : {0, 1}) {
      auto run = [&](TensorSet<double>* g, TensorSet<double>* hg) {
        ModelGraph<double> mg(params, g, g != nullptr);
        Var l = cpp_loss(mg.graph(), head, hg, mg.encode(para), label);
        if (g) mg.graph().backward(l);
        return mg.graph().scalar(l);
      };
      auto grads = params.tensors.zeros_like();
      auto head_grads = head.tensors.zeros_like();
      run(&grads, &head_grads);
      auto loss = [&] { return run(nullptr, nullptr); };
      GradCheck gc = check_gradients(params.tensors, grads, loss);
      gc.merge(check_gradients(head.tensors, head_grads, loss));
      Matrix<double> z = row_of(toy_latent(34));
      auto run_z = [&](bool want) {
        Graph<double> g(want);
        Var zv = g.leaf(z);
        Var l = cpp_loss(g, head, nullptr, zv, label);
        if (want) g.backward(l);
        return std::make_pair(g.scalar(l), want ? g.grad(zv) : Matrix<double>());
      };
      gc.merge(check_gradient("z", z, run_z(true).second, [&] { return run_z(false).first; }));
      by_objective["cpp_loss"].merge(gc);
    }

    // adversarial_loss: encoder parameters through the paragraph latent.
    auto critic = Critic<double>::init(8, 8, 35);
    auto run_adv = [&](TensorSet<double>* g) {
      ModelGraph<double> mg(params, g, g != nullptr);
      Var l = adversarial_loss(mg.graph(), critic, mg.encode(para));
      if (g) mg.graph().backward(l);
      return mg.graph().scalar(l);
    };
    auto grads = params.tensors.zeros_like();
    run_adv(&grads);
    by_objective["adversarial_loss"].merge(check_gradients(params.tensors, grads, [&] { return run_adv(nullptr); }));
  }

  // critic_loss: critic parameters; adversarial_loss: z. The critic update
  // treats z as a constant, so its z-gradient must be exactly zero.
  auto critic = Critic<double>::init(8, 8, 36);
  Matrix<double> z = row_of(toy_latent(37));
  for (auto truth : {SequenceKind::kSentence, SequenceKind::kParagraph}) {
    auto run = [&](TensorSet<double>* g) {
      Graph<double> graph(g != nullptr);
      Var l = critic_loss(graph, critic, g, graph.leaf(z), truth);
      if (g) graph.backward(l);
      return graph.scalar(l);
    };
    auto grads = critic.tensors.zeros_like();
    run(&grads);
    by_objective["critic_loss"].merge(check_gradients(critic.tensors, grads, [&] { return run(nullptr); }));
  }
  {
    Graph<double> g;
    Var zv = g.leaf(z);
    auto grads = critic.tensors.zeros_like();
    g.backward(critic_loss(g, critic, &grads, zv, SequenceKind::kParagraph));
    double mx = 0.0;
    for (double v : g.grad(zv).data) mx = std::max(mx, std::abs(v));
    out.expect(mx == 0.0, "critic_loss z-gradient is exactly zero (z is held constant)");
  }
  auto run_adv_z = [&](bool want) {
    Graph<double> g(want);
    Var zv = g.leaf(z);
    Var l = adversarial_loss(g, critic, zv);
    if (want) g.backward(l);
    return std::make_pair(g.scalar(l), want ? g.grad(zv) : Matrix<double>());
  };
  by_objective["adversarial_loss"].merge(
      check_gradient("z", z, run_adv_z(true).second, [&] { return run_adv_z(false).first; }));

  for (const auto& [name, gc] : by_objective)
    out.expect(gc.max_rel < kFdTolerance, name + ": " + std::to_string(gc.checked) + " entries, max rel error " +
                                              fmt("%.2e", gc.max_rel) + " at " + gc.worst);
  return out;
}

// ---- 4: noise statistics ----------------------------------------------------

Outcome criterion_noise() {
  Outcome out;
  const NoiseSpec spec;  // p_select 0.15, p_mask 0.8, p_perm 0.5
  Rng rng(41);

  // Masking: 50000 sequences of 20 maskable tokens.
  constexpr std::size_t kSeqs = 50000, kLen = 20;
  const TokenSequence seq(kLen, 100);
  std::size_t masked = 0;
  for (std::size_t i = 0; i < kSeqs; ++i)
    for (int t : mask_tokens(seq, spec, rng)) masked += t == kMask;
  const double n_tokens = double(kSeqs * kLen);
  const double frac = double(masked) / n_tokens;
  const double mean = spec.p_select * spec.p_mask;
  // Per-sequence count: binomial mixture over the selection coin.
  const double var_seq = spec.p_select * kLen * spec.p_mask * (1 - spec.p_mask) +
                         spec.p_select * (1 - spec.p_select) * std::pow(kLen * spec.p_mask, 2);
  const double sigma = std::sqrt(kSeqs * var_seq) / n_tokens;
  out.expect(std::abs(frac - mean) <= 3 * sigma,
             fmt("mask fraction %.5f over %.0f tokens, expected %.3f +- %.5f (3 sigma)", frac, n_tokens, mean, 3 * sigma));

  // Permutation keeps the sentence multiset.
  Story story{"s", {"A b.", "C d.", "A b.", "E f.", "G h."}};
  auto sorted = story.sentences;
  std::sort(sorted.begin(), sorted.end());
  std::size_t broken = 0, shuffled = 0;
  for (int i = 0; i < 10000; ++i) {
    auto [p, did] = permute_paragraph(story, spec, rng);
    shuffled += did;
    std::sort(p.begin(), p.end());
    broken += p != sorted;
  }
  out.expect(broken == 0, fmt("permutation changed the multiset in %.0f of 10000 draws (%.0f shuffled)", double(broken),
                              double(shuffled)));

  // CPP: label balance and uniform swap index.
  std::vector<std::size_t> counts(5, 0);
  std::size_t corrupted = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto c = corrupt_paragraph(5, rng);
    if (c.label) ++corrupted, ++counts[c.swap_index];
  }
  const double lsig = std::sqrt(draws * 0.25);
  out.expect(std::abs(double(corrupted) - draws / 2.0) <= 3 * lsig,
             fmt("corrupted %.0f of 10000, expected 5000 +- %.0f", double(corrupted), 3 * lsig));
  // One goodness-of-fit test at the 3 sigma level (two-sided p = 0.0027) over
  // the four indices; four separate 3 sigma bands would false-alarm on ~1% of
  // seeds.
  const double expect_i = corrupted / 4.0, sig_i = std::sqrt(corrupted * 0.25 * 0.75);
  constexpr double kChi2Crit3Dof = 14.156;
  double chi2 = 0;
  for (std::size_t i = 1; i <= 4; ++i) {
    const double dev = double(counts[i]) - expect_i;
    chi2 += dev * dev / expect_i;
    out.note("swap index %zu: %zu draws, expected %.1f (%+.2f sigma)", i, counts[i], expect_i, dev / sig_i);
  }
  out.expect(chi2 <= kChi2Crit3Dof, fmt("swap index chi-square %.2f over 3 dof, limit %.2f", chi2, kChi2Crit3Dof));
  return out;
}

// ---- 5 and 6: desk-scale training -------------------------------------------

struct DeskData {
  testing::SyntheticCorpus corpus;
  CorpusSplit split;
  Vocab vocab;
};

const DeskData& desk_data() {
  static const DeskData d = [] {
    DeskData out{testing::make_synthetic_corpus(2000, 1), {}, {}};
    out.split = split_corpus(out.corpus.stories, {0.8, 0.1, 0.1}, 0);
    out.vocab = train_vocab(out.split.train, 400);
    return out;
  }();
  return d;
}

ModelConfig desk_model() {
  ModelConfig mc;
  mc.encoder = NetKind::kTransformer;
  mc.decoder = NetKind::kRnn;
  mc.vocab_size = desk_data().vocab.size();
  mc.emb_dim = 32;
  mc.h_dim = 64;
  mc.z_dim = 32;
  mc.trf_layers = 1;
  mc.trf_heads = 4;
  mc.trf_ff = 64;
  mc.max_len_sentence = 32;
  mc.max_len_paragraph = 96;
  return mc;
}

constexpr long kDeskFinetune = 2000;
constexpr long kDeskPretrain = 1000;
constexpr double kDeskBudgetSeconds = 30 * 60;

struct DeskRun {
  double recon_before = 0, recon_after = 0;
  double probe = 0;
  double mean_sentences = 0;
  double short_fraction = 0;  // outputs with <= 20 words after truncation
  double rouge1 = 0;
  double seconds = 0;
};

const DeskRun& desk_run(bool critic, bool pretrain, std::uint64_t seed) {
  static std::map<std::tuple<bool, bool, std::uint64_t>, DeskRun> cache;
  const auto key = std::make_tuple(critic, pretrain, seed);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const auto& d = desk_data();
  TrainSchedule ts;
  ts.pretrain_steps = pretrain ? kDeskPretrain : 0;
  ts.finetune_steps = kDeskFinetune;
  ts.batch_size = 8;
  ts.eval_every = 250;
  ts.patience = 1000;  // keep training; the best-by-validation model is still retained
  ts.use_critic = critic;
  ts.seed = seed;
  ts.val_subsample = 100;
  const auto t0 = std::chrono::steady_clock::now();
  Trainer tr(desk_model(), ts, d.vocab, d.split.train, d.split.valid, d.corpus.references);
  tr.run_pretrain();
  const std::vector<EncodedStory> probe_set(tr.train_set().begin(), tr.train_set().begin() + 100);
  DeskRun r;
  r.recon_before = tr.mean_reconstruction_loss(probe_set, 7);
  tr.run_finetune();
  r.recon_after = tr.mean_reconstruction_loss(probe_set, 7);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // Test ROUGE-1 follows the evaluation protocol (best-by-validation
  // parameters). Lengths and the probe describe the model after the 2000
  // steps, as 5a does: on this corpus validation ROUGE-1 peaks early, before
  // the critic has shaped the latents.
  const auto best = evaluate_model(tr.best_params(), d.vocab, d.split.test, d.corpus.references);
  r.rouge1 = best.rouge1;
  const Params<float>& last = tr.state().params;
  const auto rep = evaluate_model(last, d.vocab, d.split.test, d.corpus.references);
  r.mean_sentences = rep.mean_sentences;
  std::size_t short_ok = 0;
  for (const auto& e : rep.examples) short_ok += e.truncated_words <= kSummaryWordLimit && e.words <= kSummaryWordLimit;
  r.short_fraction = double(short_ok) / double(rep.examples.size());
  r.probe = segregation_probe(export_latents(last, d.vocab, d.split.test, d.split.test.size(), seed), seed);
  std::printf("  # desk run critic=%d pretrain=%d seed=%llu: %.0fs recon %.3f -> %.3f, R1 %.1f, sentences %.2f, "
              "short %.2f, probe %.3f\n",
              critic, pretrain, static_cast<unsigned long long>(seed), r.seconds, r.recon_before, r.recon_after,
              r.rouge1, r.mean_sentences, r.short_fraction, r.probe);
  std::fflush(stdout);
  return cache.emplace(key, r).first->second;
}

int majority(int seeds) { return (seeds * 2 + 2) / 3; }  // 2 of 3

Outcome criterion_reconstruction(const Options& opt) {
  Outcome out;
  for (int s = 1; s <= opt.seeds; ++s)
    for (bool critic : {false, true}) {
      const auto& r = desk_run(critic, false, s);
      out.expect(r.recon_after < 0.8 * r.recon_before,
                 fmt("seed %.0f critic %.0f: reconstruction %.3f -> %.3f", s, critic, r.recon_before, r.recon_after));
      out.expect(r.seconds <= kDeskBudgetSeconds, fmt("seed %.0f critic %.0f: %.0fs of the 1800s budget", s, critic, r.seconds));
    }
  return out;
}

Outcome criterion_segregation(const Options& opt) {
  Outcome out;
  int seg = 0, merged = 0;
  for (int s = 1; s <= opt.seeds; ++s) {
    const double plain = desk_run(false, false, s).probe;
    const double adv = desk_run(true, false, s).probe;
    seg += plain > 0.80;
    merged += adv < 0.65;
    out.note("seed %d: probe %.3f without critic, %.3f with critic", s, plain, adv);
  }
  out.expect(seg >= majority(opt.seeds), fmt("probe > 0.80 without critic on %.0f of %.0f seeds", seg, opt.seeds));
  out.expect(merged >= majority(opt.seeds), fmt("probe < 0.65 with critic on %.0f of %.0f seeds", merged, opt.seeds));
  return out;
}

Outcome criterion_lengths(const Options& opt) {
  Outcome out;
  int ok = 0;
  for (int s = 1; s <= opt.seeds; ++s) {
    const auto& r = desk_run(true, false, s);
    ok += r.mean_sentences <= 1.2 && r.short_fraction >= 0.9;
    out.note("seed %d: %.2f sentences on average, %.1f%% of outputs within 20 words", s, r.mean_sentences,
             100 * r.short_fraction);
  }
  out.expect(ok >= majority(opt.seeds), fmt("single short sentences with critic on %.0f of %.0f seeds", ok, opt.seeds));
  return out;
}

// The exposed configuration (TRF-RNN, NSSP + LM, no critic) against the same
// model without pre-training. The critic pair is reported for reference.
Outcome criterion_lm_pretraining(const Options& opt) {
  Outcome out;
  int wins = 0;
  for (int s = 1; s <= opt.seeds; ++s) {
    const auto& base = desk_run(false, false, s);
    const auto& lm = desk_run(false, true, s);
    wins += lm.rouge1 > base.rouge1;
    out.note("seed %d: test ROUGE-1 %.2f with LM pre-training, %.2f without", s, lm.rouge1, base.rouge1);
  }
  for (int s = 1; s <= opt.seeds; ++s)
    out.note("seed %d, critic (reference only): %.2f with LM pre-training, %.2f without", s,
             desk_run(true, true, s).rouge1, desk_run(true, false, s).rouge1);
  out.expect(wins >= majority(opt.seeds), fmt("LM pre-training wins on %.0f of %.0f seeds", wins, opt.seeds));

  // The full-scale configuration is a config change away.
  TrainSchedule full;
  full.objectives = {.lm = true, .cpp = false, .nssp = true};
  ModelConfig fm;
  fm.encoder = NetKind::kTransformer;
  fm.decoder = NetKind::kRnn;
  const bool paper_defaults = fm.vocab_size == (1 << 15) && fm.emb_dim == 128 && fm.h_dim == 512 && fm.z_dim == 256 &&
                              fm.trf_layers == 2 && fm.trf_heads == 8 && fm.trf_ff == 512 &&
                              full.pretrain_steps == 100000 && full.batch_size == 64 && full.learning_rate == 0.001 &&
                              full.noise.p_select == 0.15 && full.noise.p_mask == 0.8 && full.noise.p_perm == 0.5 &&
                              full.critic_hidden == 128;
  out.expect(paper_defaults, "TRF-RNN + LM + NSSP with masking and shuffling uses the published hyper-parameters");
  try {
    fm.validate();
    full.validate();
    const RunConfig shipped = load_run_config(SUMMAE_CONFIG_DIR "/trf_rnn_nssp_lm.conf");
    out.expect(shipped.model == fm && shipped.train.objectives == full.objectives && !shipped.train.use_critic &&
                   shipped.train.pretrain_steps == full.pretrain_steps && shipped.train.batch_size == full.batch_size,
               "configs/trf_rnn_nssp_lm.conf holds exactly that configuration");
  } catch (const std::exception& e) {
    out.expect(false, std::string("full configuration rejected: ") + e.what());
  }
  return out;
}

// ---- 7: checkpoint resume ---------------------------------------------------

Outcome criterion_resume() {
  Outcome out;
  auto corpus = testing::make_synthetic_corpus(64, 3);
  const Vocab vocab = train_vocab(corpus.stories, 300);
  ModelConfig mc;
  mc.encoder = NetKind::kTransformer;
  mc.decoder = NetKind::kRnn;
  mc.vocab_size = vocab.size();
  mc.emb_dim = 16;
  mc.h_dim = 16;
  mc.z_dim = 8;
  mc.trf_layers = 1;
  mc.trf_heads = 2;
  mc.trf_ff = 16;
  TrainSchedule ts;
  ts.pretrain_steps = 10;
  ts.finetune_steps = 200;
  ts.batch_size = 4;
  ts.use_critic = true;
  ts.objectives = {.lm = true, .cpp = true, .nssp = true};
  ts.seed = 5;

  const fs::path path = fs::temp_directory_path() / ("summae_accept_" + std::to_string(::getpid()) + ".ckpt");
  Trainer a(mc, ts, vocab, corpus.stories);
  a.run_pretrain();
  a.finetune_steps(20);
  save_checkpoint(path.string(), Checkpoint{ts, a.state()});
  std::vector<double> expected;
  for (int i = 0; i < 100; ++i) expected.push_back(a.finetune_step().loss);

  Checkpoint ck = load_checkpoint(path.string());
  fs::remove(path);
  Trainer b(mc, ck.schedule, vocab, corpus.stories);
  b.restore(std::move(ck.state));
  std::size_t same = 0;
  for (int i = 0; i < 100; ++i) {
    const double got = b.finetune_step().loss;
    same += std::memcmp(&got, &expected[static_cast<std::size_t>(i)], sizeof got) == 0;
  }
  out.expect(same == 100, fmt("%.0f of 100 losses after reload are bit-identical (critic alternation on)", double(same)));
  return out;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kPass:
      return "PASS";
    case Verdict::kFail:
      return "FAIL";
    default:
      return "SKIP";
  }
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

// "5" selects 5a, 5b and 5c.
bool selected(const std::set<std::string>& only, const std::string& id) {
  return only.empty() || only.count(id) || only.count(id.substr(0, 1));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"summae acceptance checks"};
  Options opt;
  std::vector<std::string> only, known;
  app.add_option("--criteria", only, "criteria to run, e.g. 2,3,5b (default: all)")->delimiter(',');
  app.add_option("--known-failure", known,
                 "criteria reported as FAIL without failing the exit status (documented as unattainable)")
      ->delimiter(',');
  app.add_option("--roc-stories", opt.roc_stories, "released test stories (ROC CSV)");
  app.add_option("--roc-references", opt.roc_references, "released test references CSV");
  app.add_option("--seeds", opt.seeds, "seeds for the stochastic desk-scale checks")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  opt.roc_stories = env_or("SUMMAE_ROC_TEST_STORIES", opt.roc_stories);
  opt.roc_references = env_or("SUMMAE_ROC_TEST_REFERENCES", opt.roc_references);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1", [&] { return criterion_baselines(opt); }},
      {"2", [] { return criterion_rouge(); }},
      {"3", [] { return criterion_gradients(); }},
      {"4", [] { return criterion_noise(); }},
      {"5a", [&] { return criterion_reconstruction(opt); }},
      {"5b", [&] { return criterion_segregation(opt); }},
      {"5c", [&] { return criterion_lengths(opt); }},
      {"6", [&] { return criterion_lm_pretraining(opt); }},
      {"7", [] { return criterion_resume(); }},
  };
  const std::set<std::string> chosen(only.begin(), only.end());
  const std::set<std::string> tolerated(known.begin(), known.end());
  int failed = 0, skipped = 0, ran = 0;
  for (const auto& [id, fn] : criteria) {
    if (!selected(chosen, id)) continue;
    ++ran;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.verdict = Verdict::kFail;
      o.details.push_back(std::string("error: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool excused = o.verdict == Verdict::kFail && tolerated.count(id);
    std::printf("criterion %s: %s (%.1fs)%s\n", id.c_str(), verdict_name(o.verdict), secs,
                excused ? " [known failure, see README]" : "");
    for (const auto& d : o.details) std::printf("  %s\n", d.c_str());
    std::fflush(stdout);
    failed += o.verdict == Verdict::kFail && !excused;
    skipped += o.verdict == Verdict::kSkip;
  }
  if (failed) return 1;
  return ran > 0 && skipped == ran ? 77 : 0;
}

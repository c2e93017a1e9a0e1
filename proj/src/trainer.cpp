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

#include "summae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <stdexcept>

#include "summae/error.hpp"
#include "summae/eval.hpp"

namespace summae {
namespace {

// Stories per gradient buffer. Buffers are reduced in chunk order, so the
// result does not depend on the number of threads.
constexpr std::size_t kChunk = 8;

struct Accum {
  TensorSet<float> model;
  TensorSet<float> critic;
  TensorSet<float> cpp;
  double loss = 0.0;
};

long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("train." + key + ": expected an integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("train." + key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("train." + key + ": expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void add_into(TensorSet<float>& dst, const TensorSet<float>& src) {
  for (std::size_t i = 0; i < dst.count(); ++i) {
    auto& d = dst[i].data;
    const auto& s = src[i].data;
    for (std::size_t j = 0; j < d.size(); ++j) d[j] += s[j];
  }
}

void scale_by(TensorSet<float>& t, float s) {
  for (std::size_t i = 0; i < t.count(); ++i)
    for (auto& v : t[i].data) v *= s;
}

// Runs fn(item, rng, accum) over the batch in fixed chunks and reduces the
// chunk buffers in order. Exceptions from worker threads are rethrown.
template <class Fn>
Accum run_batch(const std::vector<std::size_t>& items, std::vector<Rng>& rngs, const Accum& proto, Fn fn) {
  const std::size_t n_chunks = (items.size() + kChunk - 1) / kChunk;
  std::vector<Accum> parts(n_chunks);
  std::vector<std::exception_ptr> errors(n_chunks);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t c = 0; c < n_chunks; ++c) {
    try {
      Accum a{proto.model.zeros_like(), proto.critic.zeros_like(), proto.cpp.zeros_like(), 0.0};
      const std::size_t end = std::min(items.size(), (c + 1) * kChunk);
      for (std::size_t b = c * kChunk; b < end; ++b) a.loss += fn(items[b], rngs[b], a);
      parts[c] = std::move(a);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  Accum total{proto.model.zeros_like(), proto.critic.zeros_like(), proto.cpp.zeros_like(), 0.0};
  for (const auto& p : parts) {
    add_into(total.model, p.model);
    add_into(total.critic, p.critic);
    add_into(total.cpp, p.cpp);
    total.loss += p.loss;
  }
  const float inv = 1.0f / static_cast<float>(items.size());
  scale_by(total.model, inv);
  scale_by(total.critic, inv);
  scale_by(total.cpp, inv);
  total.loss /= static_cast<double>(items.size());
  return total;
}

void check_loss(double loss, long step, const char* phase) {
  if (!std::isfinite(loss))
    throw NumericalError(std::string(phase) + " loss is not finite at step " + std::to_string(step));
}

}  // namespace

// ---- schedule ---------------------------------------------------------------

void TrainSchedule::validate() const {
  if (pretrain_steps < 0) throw ConfigError("train.pretrain_steps must be >= 0");
  if (finetune_steps < 0) throw ConfigError("train.finetune_steps must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train.learning_rate must be > 0");
  if (eval_every < 1) throw ConfigError("train.eval_every must be >= 1");
  if (patience < 1) throw ConfigError("train.patience must be >= 1");
  if (!(lambda_a >= 0.0)) throw ConfigError("train.lambda_a must be >= 0");
  if (critic_hidden < 1) throw ConfigError("train.critic_hidden must be >= 1");
  if (pretrain_steps > 0 && !objectives.any())
    throw ConfigError("train.pretrain_steps > 0 but no pre-training objective is enabled");
  noise.validate();
}

std::map<std::string, std::string> TrainSchedule::to_map() const {
  return {
      {"pretrain_steps", std::to_string(pretrain_steps)},
      {"finetune_steps", std::to_string(finetune_steps)},
      {"batch_size", std::to_string(batch_size)},
      {"learning_rate", fmt(learning_rate)},
      {"eval_every", std::to_string(eval_every)},
      {"patience", std::to_string(patience)},
      {"use_critic", use_critic ? "true" : "false"},
      {"lambda_a", fmt(lambda_a)},
      {"critic_hidden", std::to_string(critic_hidden)},
      {"p_select", fmt(noise.p_select)},
      {"p_mask", fmt(noise.p_mask)},
      {"p_perm", fmt(noise.p_perm)},
      {"lm", objectives.lm ? "true" : "false"},
      {"cpp", objectives.cpp ? "true" : "false"},
      {"nssp", objectives.nssp ? "true" : "false"},
      {"val_subsample", std::to_string(val_subsample)},
      {"seed", std::to_string(seed)},
  };
}

TrainSchedule TrainSchedule::from_map(const std::map<std::string, std::string>& kv) {
  TrainSchedule s;
  for (const auto& [k, v] : kv) {
    if (k == "pretrain_steps") s.pretrain_steps = parse_long(k, v);
    else if (k == "finetune_steps") s.finetune_steps = parse_long(k, v);
    else if (k == "batch_size") s.batch_size = static_cast<int>(parse_long(k, v));
    else if (k == "learning_rate") s.learning_rate = parse_double(k, v);
    else if (k == "eval_every") s.eval_every = parse_long(k, v);
    else if (k == "patience") s.patience = static_cast<int>(parse_long(k, v));
    else if (k == "use_critic") s.use_critic = parse_bool(k, v);
    else if (k == "lambda_a") s.lambda_a = parse_double(k, v);
    else if (k == "critic_hidden") s.critic_hidden = static_cast<int>(parse_long(k, v));
    else if (k == "p_select") s.noise.p_select = parse_double(k, v);
    else if (k == "p_mask") s.noise.p_mask = parse_double(k, v);
    else if (k == "p_perm") s.noise.p_perm = parse_double(k, v);
    else if (k == "lm") s.objectives.lm = parse_bool(k, v);
    else if (k == "cpp") s.objectives.cpp = parse_bool(k, v);
    else if (k == "nssp") s.objectives.nssp = parse_bool(k, v);
    else if (k == "val_subsample") s.val_subsample = static_cast<std::size_t>(parse_long(k, v));
    else if (k == "seed") s.seed = static_cast<std::uint64_t>(parse_long(k, v));
    else throw ConfigError("unknown key train." + k);
  }
  s.validate();
  return s;
}

// ---- optimizer --------------------------------------------------------------

template <class T>
void adam_step(TensorSet<T>& params, const TensorSet<T>& grads, AdamState<T>& st, double lr) {
  if (grads.count() != params.count()) throw std::invalid_argument("adam_step: gradient set does not match");
  for (std::size_t i = 0; i < grads.count(); ++i)
    if (!grads[i].all_finite()) throw NumericalError("non-finite gradient in " + params.names[i]);
  if (st.m.count() != params.count()) st = AdamState<T>::like(params);
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  const T b1 = static_cast<T>(st.beta1), b2 = static_cast<T>(st.beta2);
  const T step_size = static_cast<T>(lr / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  const T eps = static_cast<T>(st.eps);
  for (std::size_t i = 0; i < params.count(); ++i) {
    auto& p = params[i].data;
    auto& m = st.m[i].data;
    auto& v = st.v[i].data;
    const auto& g = grads[i].data;
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      p[j] -= step_size * m[j] / (std::sqrt(v[j] * inv_c2) + eps);
    }
  }
}

template void adam_step<float>(TensorSet<float>&, const TensorSet<float>&, AdamState<float>&, double);
template void adam_step<double>(TensorSet<double>&, const TensorSet<double>&, AdamState<double>&, double);

// ---- trainer ----------------------------------------------------------------

std::string StepRecord::to_log_line() const {
  char buf[128];
  if (val_rouge1)
    std::snprintf(buf, sizeof buf, "%ld\t%s\t%.6f\t%.2f", step, phase.c_str(), loss, *val_rouge1);
  else
    std::snprintf(buf, sizeof buf, "%ld\t%s\t%.6f\t-", step, phase.c_str(), loss);
  return buf;
}

Trainer::Trainer(const ModelConfig& config, const TrainSchedule& schedule, const Vocab& vocab,
                 const std::vector<Story>& train, std::vector<Story> valid, ReferenceMap refs)
    : schedule_(schedule), vocab_(vocab), valid_(std::move(valid)), refs_(std::move(refs)) {
  config.validate();
  schedule_.validate();
  if (train.empty()) throw DataError("training set is empty");
  if (static_cast<int>(vocab.size()) != config.vocab_size)
    throw ConfigError("model.vocab_size=" + std::to_string(config.vocab_size) + " but the vocabulary has " +
                      std::to_string(vocab.size()) + " entries");
  train_.reserve(train.size());
  for (const auto& s : train) train_.push_back(encode_story(s, vocab));
  if (valid_.size() > schedule_.val_subsample) valid_.resize(schedule_.val_subsample);
  for (const auto& s : valid_)
    if (!refs_.count(s.id)) throw DataError("no references for validation story " + s.id);

  Rng seeder(schedule_.seed);
  state_.params = init_params<float>(config, seeder.next());
  state_.critic = Critic<float>::init(config.z_dim, schedule_.critic_hidden, seeder.next());
  state_.cpp_head = LogisticHead<float>::init(config.z_dim);
  state_.opt_model = AdamState<float>::like(state_.params.tensors);
  state_.opt_critic = AdamState<float>::like(state_.critic.tensors);
  state_.opt_cpp = AdamState<float>::like(state_.cpp_head.tensors);
  state_.rng = Rng(seeder.next());
}

void Trainer::restore(TrainingState state) {
  if (!(state.params.config == config())) throw ConfigError("checkpoint model config differs from the run config");
  if (state.params.tensors.count() != state_.params.tensors.count())
    throw DataError("checkpoint parameter set does not match the model");
  for (std::size_t i = 0; i < state.params.tensors.count(); ++i)
    if (!state.params.tensors[i].same_shape(state_.params.tensors[i]) ||
        state.params.tensors.names[i] != state_.params.tensors.names[i])
      throw DataError("checkpoint tensor " + state.params.tensors.names[i] + " does not match the model");
  state.params.layout = state_.params.layout;
  state_ = std::move(state);
}

std::vector<std::size_t> Trainer::batch_indices(long step) {
  const auto n = static_cast<long>(train_.size());
  const long b = schedule_.batch_size;
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(b));
  for (long k = 0; k < b; ++k) {
    const long pos = (step - 1) * b + k;
    const long epoch = pos / n;
    if (epoch != cached_epoch_) {
      epoch_order_.resize(train_.size());
      std::iota(epoch_order_.begin(), epoch_order_.end(), std::size_t{0});
      Rng r = Rng(schedule_.seed).fork(static_cast<std::uint64_t>(epoch) + 1);
      r.shuffle(epoch_order_);
      cached_epoch_ = epoch;
    }
    out.push_back(epoch_order_[static_cast<std::size_t>(pos % n)]);
  }
  return out;
}

StepRecord Trainer::pretrain_step() {
  const long step = ++state_.step;
  ++state_.pretrain_done;
  const auto items = batch_indices(step);
  Rng step_rng = state_.rng.fork(static_cast<std::uint64_t>(step));
  std::vector<Rng> rngs;
  for (std::size_t b = 0; b < items.size(); ++b) rngs.push_back(step_rng.fork(b));

  const auto& params = state_.params;
  const auto& head = state_.cpp_head;
  const auto& obj = schedule_.objectives;
  const ModelConfig& cfg = params.config;
  Accum proto{params.tensors, {}, head.tensors, 0.0};
  Accum acc = run_batch(items, rngs, proto, [&](std::size_t idx, Rng& rng, Accum& a) {
    const EncodedStory& story = train_[idx];
    ModelGraph<float> mg(params, &a.model, true);
    auto& g = mg.graph();
    std::vector<Var> terms;
    if (obj.lm) {
      Var s = lm_loss(mg, sentence_tokens(story, 0), SequenceKind::kSentence);
      for (std::size_t i = 1; i < story.size(); ++i)
        s = g.add(s, lm_loss(mg, sentence_tokens(story, i), SequenceKind::kSentence));
      s = g.scale(s, static_cast<float>(cfg.lambda_s / static_cast<double>(story.size())));
      std::vector<std::size_t> order(story.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      Var p = g.scale(lm_loss(mg, paragraph_tokens(story, order), SequenceKind::kParagraph),
                      static_cast<float>(cfg.lambda_p));
      terms.push_back(g.add(s, p));
    }
    if (obj.cpp && story.size() >= 2) {
      Corruption c = corrupt_paragraph(story.size(), rng);
      Var z = mg.encode(paragraph_tokens(story, c.order));
      terms.push_back(cpp_loss(g, head, &a.cpp, z, c.label));
    }
    if (obj.nssp && story.size() >= 3) {
      NsspPair p = sample_nssp_pair(story.size(), rng);
      terms.push_back(nssp_loss(mg, sentence_tokens(story, p.a), sentence_tokens(story, p.b), p.label));
    }
    if (terms.empty()) return 0.0;
    Var loss = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) loss = g.add(loss, terms[i]);
    g.backward(loss);
    return static_cast<double>(g.scalar(loss));
  });
  check_loss(acc.loss, step, "pretrain");
  adam_step(state_.params.tensors, acc.model, state_.opt_model, schedule_.learning_rate);
  if (obj.cpp) adam_step(state_.cpp_head.tensors, acc.cpp, state_.opt_cpp, schedule_.learning_rate);
  return {step, "pretrain", acc.loss, std::nullopt};
}

StepRecord Trainer::finetune_step() {
  const long step = ++state_.step;
  ++state_.finetune_done;
  const auto items = batch_indices(step);
  Rng step_rng = state_.rng.fork(static_cast<std::uint64_t>(step));
  std::vector<Rng> rngs;
  for (std::size_t b = 0; b < items.size(); ++b) rngs.push_back(step_rng.fork(b));

  const auto& params = state_.params;
  const auto& critic = state_.critic;
  const NoiseSpec& noise = schedule_.noise;
  StepRecord rec;
  rec.step = step;

  if (schedule_.use_critic && step % 2 == 0) {
    Accum proto{{}, critic.tensors, {}, 0.0};
    Accum acc = run_batch(items, rngs, proto, [&](std::size_t idx, Rng& rng, Accum& a) {
      const EncodedStory& story = train_[idx];
      StoryExamples ex = make_story_examples(story, noise, rng);
      const std::size_t pick = rng.uniform_index(ex.sentences.size());
      ModelGraph<float> mg(params, nullptr, false);
      Var zp = mg.encode(ex.paragraph.encoder_input);
      Var zs = mg.encode(ex.sentences[pick].encoder_input);
      Graph<float> g;
      Var lp = critic_loss(g, critic, &a.critic, g.constant(mg.graph().value(zp)), SequenceKind::kParagraph);
      Var ls = critic_loss(g, critic, &a.critic, g.constant(mg.graph().value(zs)), SequenceKind::kSentence);
      Var loss = g.scale(g.add(lp, ls), 0.5f);
      g.backward(loss);
      return static_cast<double>(g.scalar(loss));
    });
    check_loss(acc.loss, step, "critic");
    adam_step(state_.critic.tensors, acc.critic, state_.opt_critic, schedule_.learning_rate);
    rec.phase = "critic";
    rec.loss = acc.loss;
  } else {
    const bool adversarial = schedule_.use_critic;
    const float lambda_a = static_cast<float>(schedule_.lambda_a);
    Accum proto{params.tensors, {}, {}, 0.0};
    Accum acc = run_batch(items, rngs, proto, [&](std::size_t idx, Rng& rng, Accum& a) {
      StoryExamples ex = make_story_examples(train_[idx], noise, rng);
      ModelGraph<float> mg(params, &a.model, true);
      auto& g = mg.graph();
      auto terms = reconstruction_terms(mg, ex);
      Var loss = terms.loss;
      if (adversarial) loss = g.add(loss, g.scale(adversarial_loss(g, critic, terms.paragraph_z), lambda_a));
      g.backward(loss);
      return static_cast<double>(g.scalar(loss));
    });
    check_loss(acc.loss, step, "ae");
    adam_step(state_.params.tensors, acc.model, state_.opt_model, schedule_.learning_rate);
    rec.phase = "ae";
    rec.loss = acc.loss;
  }
  maybe_validate(rec);
  return rec;
}

void Trainer::maybe_validate(StepRecord& rec) {
  if (valid_.empty() || state_.finetune_done % schedule_.eval_every != 0) return;
  const double score = validate();
  rec.val_rouge1 = score;
  if (score > state_.best_score) {
    state_.best_score = score;
    state_.best_params = state_.params.tensors;
    state_.evals_since_best = 0;
  } else if (++state_.evals_since_best >= schedule_.patience) {
    state_.stopped = true;
  }
}

double Trainer::validate() const {
  if (valid_.empty()) throw DataError("no validation stories");
  return evaluate_model(state_.params, vocab_, valid_, refs_).rouge1;
}

std::vector<StepRecord> Trainer::run_pretrain(const StepCallback& on_step) {
  std::vector<StepRecord> out;
  while (state_.pretrain_done < schedule_.pretrain_steps) {
    out.push_back(pretrain_step());
    if (on_step) on_step(out.back());
  }
  return out;
}

std::vector<StepRecord> Trainer::finetune_steps(long n, const StepCallback& on_step) {
  std::vector<StepRecord> out;
  for (long i = 0; i < n && !state_.stopped; ++i) {
    out.push_back(finetune_step());
    if (on_step) on_step(out.back());
  }
  return out;
}

std::vector<StepRecord> Trainer::run_finetune(const StepCallback& on_step) {
  return finetune_steps(std::max(0L, schedule_.finetune_steps - state_.finetune_done), on_step);
}

Params<float> Trainer::best_params() const {
  Params<float> p = state_.params;
  if (state_.best_params.count() == p.tensors.count()) p.tensors = state_.best_params;
  return p;
}

double Trainer::mean_reconstruction_loss(const std::vector<EncodedStory>& stories, std::uint64_t noise_seed) const {
  if (stories.empty()) throw std::invalid_argument("mean_reconstruction_loss: no stories");
  std::vector<double> losses(stories.size());
  Rng base(noise_seed);
  std::vector<Rng> rngs;
  for (std::size_t i = 0; i < stories.size(); ++i) rngs.push_back(base.fork(i));
#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t i = 0; i < stories.size(); ++i) {
    StoryExamples ex = make_story_examples(stories[i], schedule_.noise, rngs[i]);
    losses[i] = reconstruction_loss<float>(state_.params, ex, nullptr);
  }
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

}  // namespace summae

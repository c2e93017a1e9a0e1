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

#ifndef SUMMAE_TRAINER_HPP_
#define SUMMAE_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "summae/corpus.hpp"
#include "summae/model.hpp"
#include "summae/noising.hpp"
#include "summae/objectives.hpp"
#include "summae/random.hpp"
#include "summae/subword.hpp"

namespace summae {

/// Which self-supervised objectives run during pre-training. Their losses
/// are summed.
struct PretrainObjectives {
  bool lm = true;
  bool cpp = false;
  bool nssp = false;

  bool any() const { return lm || cpp || nssp; }
  bool operator==(const PretrainObjectives&) const = default;
};

struct TrainSchedule {
  long pretrain_steps = 100000;
  long finetune_steps = 100000;  // upper bound; early stopping usually ends first
  int batch_size = 64;
  double learning_rate = 0.001;
  long eval_every = 1000;
  int patience = 10;
  bool use_critic = false;
  double lambda_a = 1.0;
  int critic_hidden = kCriticHidden;
  NoiseSpec noise;
  PretrainObjectives objectives;
  std::size_t val_subsample = 200;
  std::uint64_t seed = 0;

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  static TrainSchedule from_map(const std::map<std::string, std::string>& kv);
};

template <class T>
struct AdamState {
  TensorSet<T> m;
  TensorSet<T> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState like(const TensorSet<T>& params) { return {params.zeros_like(), params.zeros_like()}; }
};

// Bias-corrected Adam. Throws NumericalError naming the first parameter
// group whose gradient is not finite; nothing is updated in that case.
template <class T>
void adam_step(TensorSet<T>& params, const TensorSet<T>& grads, AdamState<T>& state, double lr);

/// Everything needed to continue a run exactly where it stopped.
struct TrainingState {
  Params<float> params;
  Critic<float> critic;
  LogisticHead<float> cpp_head;
  AdamState<float> opt_model;
  AdamState<float> opt_critic;
  AdamState<float> opt_cpp;
  TensorSet<float> best_params;
  long step = 0;  // global step, counting both phases
  long pretrain_done = 0;
  long finetune_done = 0;
  double best_score = -1.0;
  int evals_since_best = 0;
  bool stopped = false;
  Rng rng;
};

struct StepRecord {
  long step = 0;
  std::string phase;  // "pretrain", "ae" or "critic"
  double loss = 0.0;
  std::optional<double> val_rouge1;

  std::string to_log_line() const;
};

using StepCallback = std::function<void(const StepRecord&)>;

class Trainer {
 public:
  // valid/refs may be empty, which disables early stopping.
  Trainer(const ModelConfig& config, const TrainSchedule& schedule, const Vocab& vocab,
          const std::vector<Story>& train, std::vector<Story> valid = {}, ReferenceMap refs = {});

  const TrainSchedule& schedule() const { return schedule_; }
  const ModelConfig& config() const { return state_.params.config; }
  TrainingState& state() { return state_; }
  const TrainingState& state() const { return state_; }
  void restore(TrainingState state);

  StepRecord pretrain_step();
  // Alternates critic and auto-encoder updates when the critic is enabled.
  StepRecord finetune_step();

  // Run the configured number of steps (resuming where the state left off).
  std::vector<StepRecord> run_pretrain(const StepCallback& on_step = {});
  std::vector<StepRecord> run_finetune(const StepCallback& on_step = {});
  // Runs at most n fine-tune steps, honoring early stopping.
  std::vector<StepRecord> finetune_steps(long n, const StepCallback& on_step = {});

  // Validation ROUGE-1 (x100) on the configured subsample.
  double validate() const;

  // Parameters with the best validation score seen so far, or the current
  // ones if no validation ran.
  Params<float> best_params() const;

  // Reconstruction loss of the current parameters averaged over the given
  // stories, with a fixed noise seed.
  double mean_reconstruction_loss(const std::vector<EncodedStory>& stories, std::uint64_t noise_seed) const;

  const std::vector<EncodedStory>& train_set() const { return train_; }

 private:
  std::vector<std::size_t> batch_indices(long step);
  void maybe_validate(StepRecord& rec);

  TrainSchedule schedule_;
  const Vocab& vocab_;
  std::vector<EncodedStory> train_;
  std::vector<Story> valid_;
  ReferenceMap refs_;
  TrainingState state_;
  mutable long cached_epoch_ = -1;
  mutable std::vector<std::size_t> epoch_order_;
};

}  // namespace summae

#endif  // SUMMAE_TRAINER_HPP_

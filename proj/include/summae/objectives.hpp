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

// Auxiliary objectives: decoder language-model pre-training, the two encoder
// pre-training tasks (corrupted paragraph prediction, next-sentence-or-
// same-paragraph), and the sentence/paragraph critic used for adversarial
// alignment of the latent space.

#ifndef SUMMAE_OBJECTIVES_HPP_
#define SUMMAE_OBJECTIVES_HPP_

#include <cstdint>
#include <type_traits>
#include <vector>

#include "summae/autograd.hpp"
#include "summae/model.hpp"
#include "summae/random.hpp"

namespace summae {

// ---- language model -------------------------------------------------------

// teacher_forced_nll with z = 0: the decoder gets no conditioning signal.
template <class T>
Var lm_loss(ModelGraph<T>& mg, const TokenSequence& target, SequenceKind kind);

template <class T>
T lm_loss(const Params<T>& params, const TokenSequence& target, SequenceKind kind, TensorSet<T>* grads = nullptr);

// ---- corrupted paragraph prediction ---------------------------------------

struct Corruption {
  std::vector<std::size_t> order;  // sentence indices after corruption
  int label = 0;                   // 1 when two adjacent sentences were swapped
  std::size_t swap_index = 0;      // 1-based i: sentences i and i+1 swapped (0 if clean)
};

// With probability 1/2 the identity (label 0); otherwise swaps sentences i
// and i+1 for i uniform in [1, n-1] (label 1).
Corruption corrupt_paragraph(std::size_t n, Rng& rng);
std::pair<std::vector<std::string>, Corruption> corrupt_paragraph(const Story& story, Rng& rng);

// Logistic regression on a paragraph latent. Only used during pre-training.
template <class T>
struct LogisticHead {
  TensorSet<T> tensors;  // "cpp.w" (1 x z_dim), "cpp.c" (1 x 1)

  static LogisticHead init(int z_dim);
};

template <class T>
Var cpp_logit(Graph<T>& g, const LogisticHead<T>& head, std::type_identity_t<TensorSet<T>>* grads, Var z);

template <class T>
Var cpp_loss(Graph<T>& g, const LogisticHead<T>& head, std::type_identity_t<TensorSet<T>>* grads, Var paragraph_z, int label);

// ---- next sentence or same paragraph --------------------------------------

struct NsspPair {
  std::size_t a = 0;  // 0-based sentence index
  std::size_t b = 0;
  int label = 0;  // 1 when b == a + 1
};

// a uniform over sentences that have a successor. Positives take the next
// sentence; negatives draw uniformly from the same paragraph excluding a
// and a + 1. Throws std::invalid_argument when n < 3.
NsspPair sample_nssp_pair(std::size_t n, Rng& rng);

// BCE of sigmoid(encode(A) . encode(B)); no extra parameters.
template <class T>
Var nssp_logit(ModelGraph<T>& mg, const TokenSequence& a, const TokenSequence& b);

template <class T>
Var nssp_loss(ModelGraph<T>& mg, const TokenSequence& a, const TokenSequence& b, int label);

// ---- critic ----------------------------------------------------------------

// One-hidden-layer MLP (tanh) from z to the logit of p(paragraph | z).
template <class T>
struct Critic {
  TensorSet<T> tensors;  // "critic.w1", "critic.b1", "critic.w2", "critic.b2"

  static Critic init(int z_dim, int hidden, std::uint64_t seed);
  int hidden() const { return static_cast<int>(tensors[0].cols); }
};

inline constexpr int kCriticHidden = 128;

template <class T>
Var critic_logit(Graph<T>& g, const Critic<T>& critic, std::type_identity_t<TensorSet<T>>* grads, Var z);

// Classification loss for the critic. z is detached: no gradient reaches
// the encoder.
template <class T>
Var critic_loss(Graph<T>& g, const Critic<T>& critic, std::type_identity_t<TensorSet<T>>* critic_grads, Var z, SequenceKind truth);

// -log p(sentence | z_paragraph). The critic is held constant: gradients
// reach only z (and through it the encoder).
template <class T>
Var adversarial_loss(Graph<T>& g, const Critic<T>& critic, Var paragraph_z);

// Probability the critic assigns to "paragraph".
template <class T>
T critic_paragraph_probability(const Critic<T>& critic, const std::vector<T>& z);

}  // namespace summae

#endif  // SUMMAE_OBJECTIVES_HPP_

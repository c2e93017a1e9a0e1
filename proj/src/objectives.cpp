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

#include "summae/objectives.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace summae {

template <class T>
Var lm_loss(ModelGraph<T>& mg, const TokenSequence& target, SequenceKind kind) {
  return mg.nll(mg.zero_latent(), kind, target);
}

template <class T>
T lm_loss(const Params<T>& params, const TokenSequence& target, SequenceKind kind, TensorSet<T>* grads) {
  ModelGraph<T> mg(params, grads, grads != nullptr);
  Var loss = lm_loss(mg, target, kind);
  if (grads) mg.graph().backward(loss);
  return mg.graph().scalar(loss);
}

Corruption corrupt_paragraph(std::size_t n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("corrupt_paragraph: need at least 2 sentences");
  Corruption c;
  c.order.resize(n);
  std::iota(c.order.begin(), c.order.end(), 0);
  if (!rng.bernoulli(0.5)) return c;
  c.label = 1;
  c.swap_index = 1 + rng.uniform_index(n - 1);
  std::swap(c.order[c.swap_index - 1], c.order[c.swap_index]);
  return c;
}

std::pair<std::vector<std::string>, Corruption> corrupt_paragraph(const Story& story, Rng& rng) {
  Corruption c = corrupt_paragraph(story.sentences.size(), rng);
  std::vector<std::string> out;
  for (std::size_t i : c.order) out.push_back(story.sentences[i]);
  return {out, c};
}

template <class T>
LogisticHead<T> LogisticHead<T>::init(int z_dim) {
  LogisticHead h;
  h.tensors.add("cpp.w", 1, static_cast<std::size_t>(z_dim));
  h.tensors.add("cpp.c", 1, 1);
  return h;
}

template <class T>
Var cpp_logit(Graph<T>& g, const LogisticHead<T>& head, std::type_identity_t<TensorSet<T>>* grads, Var z) {
  Var w = g.param(head.tensors[0], grads ? &(*grads)[0] : nullptr);
  Var c = g.param(head.tensors[1], grads ? &(*grads)[1] : nullptr);
  return g.add(g.matmul_nt(z, w), c);
}

template <class T>
Var cpp_loss(Graph<T>& g, const LogisticHead<T>& head, std::type_identity_t<TensorSet<T>>* grads, Var paragraph_z, int label) {
  if (label != 0 && label != 1) throw std::invalid_argument("cpp_loss: label must be 0 or 1");
  return g.bce_with_logits(cpp_logit(g, head, grads, paragraph_z), static_cast<T>(label));
}

NsspPair sample_nssp_pair(std::size_t n, Rng& rng) {
  if (n < 3) throw std::invalid_argument("sample_nssp_pair: need at least 3 sentences for a negative");
  NsspPair p;
  p.a = rng.uniform_index(n - 1);
  if (rng.bernoulli(0.5)) {
    p.b = p.a + 1;
    p.label = 1;
    return p;
  }
  // Uniform over the n - 2 sentences other than a and a + 1.
  std::size_t k = rng.uniform_index(n - 2);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == p.a || i == p.a + 1) continue;
    if (k-- == 0) {
      p.b = i;
      break;
    }
  }
  p.label = 0;
  return p;
}

template <class T>
Var nssp_logit(ModelGraph<T>& mg, const TokenSequence& a, const TokenSequence& b) {
  Var za = mg.encode(a);
  Var zb = mg.encode(b);
  return mg.graph().matmul_nt(za, zb);
}

template <class T>
Var nssp_loss(ModelGraph<T>& mg, const TokenSequence& a, const TokenSequence& b, int label) {
  if (label != 0 && label != 1) throw std::invalid_argument("nssp_loss: label must be 0 or 1");
  return mg.graph().bce_with_logits(nssp_logit(mg, a, b), static_cast<T>(label));
}

template <class T>
Critic<T> Critic<T>::init(int z_dim, int hidden, std::uint64_t seed) {
  Critic c;
  const auto Z = static_cast<std::size_t>(z_dim);
  const auto H = static_cast<std::size_t>(hidden);
  c.tensors.add("critic.w1", Z, H);
  c.tensors.add("critic.b1", 1, H);
  c.tensors.add("critic.w2", H, 1);
  c.tensors.add("critic.b2", 1, 1);
  Rng rng(seed);
  for (std::size_t i : {std::size_t{0}, std::size_t{2}}) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(c.tensors[i].rows));
    for (auto& v : c.tensors[i].data) v = static_cast<T>(rng.normal() * sd);
  }
  return c;
}

template <class T>
Var critic_logit(Graph<T>& g, const Critic<T>& critic, std::type_identity_t<TensorSet<T>>* grads, Var z) {
  auto p = [&](std::size_t i) { return g.param(critic.tensors[i], grads ? &(*grads)[i] : nullptr); };
  Var h = g.tanh(g.add_row(g.matmul(z, p(0)), p(1)));
  return g.add_row(g.matmul(h, p(2)), p(3));
}

template <class T>
Var critic_loss(Graph<T>& g, const Critic<T>& critic, std::type_identity_t<TensorSet<T>>* critic_grads, Var z, SequenceKind truth) {
  Var detached = g.constant(g.value(z));
  const T label = truth == SequenceKind::kParagraph ? T(1) : T(0);
  return g.bce_with_logits(critic_logit(g, critic, critic_grads, detached), label);
}

template <class T>
Var adversarial_loss(Graph<T>& g, const Critic<T>& critic, Var paragraph_z) {
  return g.bce_with_logits(critic_logit<T>(g, critic, nullptr, paragraph_z), T(0));
}

template <class T>
T critic_paragraph_probability(const Critic<T>& critic, const std::vector<T>& z) {
  Graph<T> g(false);
  Matrix<T> zm(1, z.size());
  zm.data = z;
  return Graph<T>::stable_sigmoid(g.scalar(critic_logit<T>(g, critic, nullptr, g.constant(std::move(zm)))));
}

#define SUMMAE_INSTANTIATE(T)                                                                           \
  template Var lm_loss<T>(ModelGraph<T>&, const TokenSequence&, SequenceKind);                         \
  template T lm_loss<T>(const Params<T>&, const TokenSequence&, SequenceKind, TensorSet<T>*);          \
  template struct LogisticHead<T>;                                                                     \
  template Var cpp_logit<T>(Graph<T>&, const LogisticHead<T>&, TensorSet<T>*, Var);                    \
  template Var cpp_loss<T>(Graph<T>&, const LogisticHead<T>&, TensorSet<T>*, Var, int);                \
  template Var nssp_logit<T>(ModelGraph<T>&, const TokenSequence&, const TokenSequence&);              \
  template Var nssp_loss<T>(ModelGraph<T>&, const TokenSequence&, const TokenSequence&, int);           \
  template struct Critic<T>;                                                                           \
  template Var critic_logit<T>(Graph<T>&, const Critic<T>&, TensorSet<T>*, Var);                       \
  template Var critic_loss<T>(Graph<T>&, const Critic<T>&, TensorSet<T>*, Var, SequenceKind);          \
  template Var adversarial_loss<T>(Graph<T>&, const Critic<T>&, Var);                                  \
  template T critic_paragraph_probability<T>(const Critic<T>&, const std::vector<T>&);

SUMMAE_INSTANTIATE(float)
SUMMAE_INSTANTIATE(double)

#undef SUMMAE_INSTANTIATE

}  // namespace summae

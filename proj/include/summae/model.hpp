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

// Sentence/paragraph auto-encoder.
//
// The encoder maps a token sequence to a latent vector z (bidirectional GRU
// over the tokens, or a Transformer encoder pooled at a leading CLS
// position, each followed by an affine map). The decoder is conditioned on
// z and on a prompt token selecting sentence or paragraph output; a GRU
// decoder concatenates z to every input embedding, a causal Transformer
// decoder adds a projection of z to every input embedding. There is no
// decoder-encoder attention. Input and output embeddings share storage.

#ifndef SUMMAE_MODEL_HPP_
#define SUMMAE_MODEL_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "summae/autograd.hpp"
#include "summae/noising.hpp"
#include "summae/subword.hpp"
#include "summae/tensor.hpp"

namespace summae {

enum class NetKind { kRnn, kTransformer };

std::string to_string(NetKind k);
NetKind parse_net_kind(const std::string& s);

struct ModelConfig {
  NetKind encoder = NetKind::kRnn;
  NetKind decoder = NetKind::kRnn;
  int vocab_size = 1 << 15;
  int emb_dim = 128;
  int h_dim = 512;
  int trf_layers = 2;
  int trf_heads = 8;
  int trf_ff = 512;
  int z_dim = 256;
  double lambda_s = 1.0;
  double lambda_p = 1.0;
  int max_len_sentence = 32;
  int max_len_paragraph = 128;

  // Throws ConfigError.
  void validate() const;

  std::map<std::string, std::string> to_map() const;
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);

  bool operator==(const ModelConfig&) const = default;
};

/// Indices of every parameter tensor in a TensorSet built for a config.
struct ParamLayout {
  struct Gru {
    std::size_t wx, bx, urz, un;
  };
  struct Block {
    std::size_t wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
  };

  std::size_t embedding = 0;
  // RNN encoder
  Gru enc_fw{}, enc_bw{};
  // TRF encoder
  std::vector<Block> enc_blocks;
  std::size_t enc_proj_w = 0, enc_proj_b = 0;
  // RNN decoder: wx is the embedding part, dec_wz the z part of the input map.
  Gru dec_gru{};
  std::size_t dec_wz = 0;
  // TRF decoder
  std::vector<Block> dec_blocks;
  std::size_t dec_zproj = 0;
  std::size_t dec_out_w = 0, dec_out_b = 0;

  template <class T>
  static ParamLayout build(const ModelConfig& cfg, TensorSet<T>* params);
};

template <class T>
struct Params {
  ModelConfig config;
  ParamLayout layout;
  TensorSet<T> tensors;
};

// Seed-deterministic random initialization.
template <class T>
Params<T> init_params(const ModelConfig& config, std::uint64_t seed);

template <class T>
using LatentVector = std::vector<T>;

/// Builds model computations on one autograd Graph. Parameters are bound
/// lazily, once per graph; gradients accumulate into `grads` when given.
template <class T>
class ModelGraph {
 public:
  ModelGraph(const Params<T>& params, TensorSet<T>* grads, bool grad_enabled = true);

  Graph<T>& graph() { return graph_; }
  const ModelConfig& config() const { return params_.config; }

  Var param(std::size_t index);

  // z as a 1 x z_dim row.
  Var encode(const TokenSequence& input);

  // Teacher-forced logits: row i predicts target[i] from the prompt and
  // target[0..i-1]. Returns target.size() x vocab.
  Var decoder_logits(Var z, SequenceKind prompt, const TokenSequence& target);

  // Mean per-token negative log-likelihood of target.
  Var nll(Var z, SequenceKind prompt, const TokenSequence& target);

  Var zero_latent();

  // GRU decoder internals, exposed for incremental greedy decoding.
  Var rnn_decoder_states(Var z, const TokenSequence& inputs, Var h0);
  Var output_logits(Var states);

 private:
  Var embed_positions(const TokenSequence& ids, std::size_t offset);
  Var transformer_block(Var x, const ParamLayout::Block& b, bool causal);
  Var transformer_decoder_states(Var z, const TokenSequence& inputs);

  const Params<T>& params_;
  TensorSet<T>* grads_;
  Graph<T> graph_;
  std::vector<Var> bound_;
};

template <class T>
LatentVector<T> encode(const Params<T>& params, const TokenSequence& input);

// Greedy arg-max decoding from the prompt token until EOS or the prompt's
// length cap. The returned sequence includes the EOS when one is produced.
// max_len overrides the cap from the config when given.
template <class T>
TokenSequence decode_greedy(const Params<T>& params, const LatentVector<T>& z, SequenceKind prompt,
                            std::optional<int> max_len = std::nullopt);

template <class T>
struct NllResult {
  T loss = T(0);
  std::vector<T> z_grad;
};

// Mean per-token NLL of target (EOS-terminated). When grads is non-null the
// parameter gradients are accumulated into it.
template <class T>
NllResult<T> teacher_forced_nll(const Params<T>& params, const LatentVector<T>& z, SequenceKind prompt,
                                const TokenSequence& target, TensorSet<T>* grads = nullptr);

/// All auto-encoding inputs for one story.
struct StoryExamples {
  std::vector<NoisedExample> sentences;
  NoisedExample paragraph;
};

StoryExamples make_story_examples(const EncodedStory& story, const NoiseSpec& spec, Rng& rng);

template <class T>
struct ReconstructionTerms {
  Var loss;
  Var paragraph_z;
  std::vector<Var> sentence_z;
  T sentence_nll = T(0);  // mean over sentences
  T paragraph_nll = T(0);
};

// lambda_s * mean_i nll(s_i) + lambda_p * nll(p); sentences decoded with the
// sentence prompt, the paragraph with the paragraph prompt.
template <class T>
ReconstructionTerms<T> reconstruction_terms(ModelGraph<T>& mg, const StoryExamples& ex);

template <class T>
T reconstruction_loss(const Params<T>& params, const StoryExamples& ex, TensorSet<T>* grads = nullptr);

// Throws std::invalid_argument unless target ends with its only EOS.
void check_decoder_target(const TokenSequence& target);

}  // namespace summae

#endif  // SUMMAE_MODEL_HPP_

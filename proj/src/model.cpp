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

#include "summae/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "summae/error.hpp"
#include "summae/random.hpp"

namespace summae {

std::string to_string(NetKind k) { return k == NetKind::kRnn ? "rnn" : "trf"; }

NetKind parse_net_kind(const std::string& s) {
  if (s == "rnn" || s == "RNN") return NetKind::kRnn;
  if (s == "trf" || s == "TRF") return NetKind::kTransformer;
  throw ConfigError("unknown network kind '" + s + "' (expected rnn or trf)");
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw ConfigError(std::string("model.") + name + " must be positive");
  };
  positive(vocab_size, "vocab_size");
  positive(emb_dim, "emb_dim");
  positive(h_dim, "h_dim");
  positive(z_dim, "z_dim");
  positive(max_len_sentence, "max_len_sentence");
  positive(max_len_paragraph, "max_len_paragraph");
  if (encoder == NetKind::kTransformer || decoder == NetKind::kTransformer) {
    positive(trf_layers, "trf_layers");
    positive(trf_heads, "trf_heads");
    positive(trf_ff, "trf_ff");
    if (emb_dim % trf_heads != 0) throw ConfigError("model.emb_dim must be divisible by model.trf_heads");
  }
  if (vocab_size <= kNumSpecials) throw ConfigError("model.vocab_size must exceed the special tokens");
  if (lambda_s < 0 || lambda_p < 0 || (lambda_s == 0 && lambda_p == 0)) {
    throw ConfigError("model.lambda_s and model.lambda_p must be >= 0 and not both 0");
  }
}

std::map<std::string, std::string> ModelConfig::to_map() const {
  auto d = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  return {
      {"encoder", to_string(encoder)},
      {"decoder", to_string(decoder)},
      {"vocab_size", std::to_string(vocab_size)},
      {"emb_dim", std::to_string(emb_dim)},
      {"h_dim", std::to_string(h_dim)},
      {"trf_layers", std::to_string(trf_layers)},
      {"trf_heads", std::to_string(trf_heads)},
      {"trf_ff", std::to_string(trf_ff)},
      {"z_dim", std::to_string(z_dim)},
      {"lambda_s", d(lambda_s)},
      {"lambda_p", d(lambda_p)},
      {"max_len_sentence", std::to_string(max_len_sentence)},
      {"max_len_paragraph", std::to_string(max_len_paragraph)},
  };
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  for (const auto& [k, v] : kv) {
    try {
      if (k == "encoder") c.encoder = parse_net_kind(v);
      else if (k == "decoder") c.decoder = parse_net_kind(v);
      else if (k == "vocab_size") c.vocab_size = std::stoi(v);
      else if (k == "emb_dim") c.emb_dim = std::stoi(v);
      else if (k == "h_dim") c.h_dim = std::stoi(v);
      else if (k == "trf_layers") c.trf_layers = std::stoi(v);
      else if (k == "trf_heads") c.trf_heads = std::stoi(v);
      else if (k == "trf_ff") c.trf_ff = std::stoi(v);
      else if (k == "z_dim") c.z_dim = std::stoi(v);
      else if (k == "lambda_s") c.lambda_s = std::stod(v);
      else if (k == "lambda_p") c.lambda_p = std::stod(v);
      else if (k == "max_len_sentence") c.max_len_sentence = std::stoi(v);
      else if (k == "max_len_paragraph") c.max_len_paragraph = std::stoi(v);
      else throw ConfigError("unknown key model." + k);
    } catch (const std::logic_error&) {
      throw ConfigError("bad value for model." + k + ": '" + v + "'");
    }
  }
  return c;
}

template <class T>
ParamLayout ParamLayout::build(const ModelConfig& cfg, TensorSet<T>* ps) {
  const auto V = static_cast<std::size_t>(cfg.vocab_size);
  const auto E = static_cast<std::size_t>(cfg.emb_dim);
  const auto H = static_cast<std::size_t>(cfg.h_dim);
  const auto Z = static_cast<std::size_t>(cfg.z_dim);
  const auto F = static_cast<std::size_t>(cfg.trf_ff);
  ParamLayout L;
  L.embedding = ps->add("embedding", V, E);

  auto gru = [&](const std::string& p, std::size_t in) {
    Gru g{};
    g.wx = ps->add(p + ".wx", in, 3 * H);
    g.bx = ps->add(p + ".bx", 1, 3 * H);
    g.urz = ps->add(p + ".urz", H, 2 * H);
    g.un = ps->add(p + ".un", H, H);
    return g;
  };
  auto block = [&](const std::string& p) {
    Block b{};
    b.wq = ps->add(p + ".wq", E, E);
    b.bq = ps->add(p + ".bq", 1, E);
    b.wk = ps->add(p + ".wk", E, E);
    b.bk = ps->add(p + ".bk", 1, E);
    b.wv = ps->add(p + ".wv", E, E);
    b.bv = ps->add(p + ".bv", 1, E);
    b.wo = ps->add(p + ".wo", E, E);
    b.bo = ps->add(p + ".bo", 1, E);
    b.ln1_g = ps->add(p + ".ln1.g", 1, E);
    b.ln1_b = ps->add(p + ".ln1.b", 1, E);
    b.w1 = ps->add(p + ".ff.w1", E, F);
    b.b1 = ps->add(p + ".ff.b1", 1, F);
    b.w2 = ps->add(p + ".ff.w2", F, E);
    b.b2 = ps->add(p + ".ff.b2", 1, E);
    b.ln2_g = ps->add(p + ".ln2.g", 1, E);
    b.ln2_b = ps->add(p + ".ln2.b", 1, E);
    return b;
  };

  std::size_t enc_out = 0;
  if (cfg.encoder == NetKind::kRnn) {
    L.enc_fw = gru("enc.fw", E);
    L.enc_bw = gru("enc.bw", E);
    enc_out = 2 * H;
  } else {
    for (int l = 0; l < cfg.trf_layers; ++l) L.enc_blocks.push_back(block("enc.l" + std::to_string(l)));
    enc_out = E;
  }
  L.enc_proj_w = ps->add("enc.proj.w", enc_out, Z);
  L.enc_proj_b = ps->add("enc.proj.b", 1, Z);

  std::size_t dec_out = 0;
  if (cfg.decoder == NetKind::kRnn) {
    L.dec_gru = gru("dec", E);
    L.dec_wz = ps->add("dec.wz", Z, 3 * H);
    dec_out = H;
  } else {
    L.dec_zproj = ps->add("dec.zproj", Z, E);
    for (int l = 0; l < cfg.trf_layers; ++l) L.dec_blocks.push_back(block("dec.l" + std::to_string(l)));
    dec_out = E;
  }
  L.dec_out_w = ps->add("dec.out.w", dec_out, E);
  L.dec_out_b = ps->add("dec.out.b", 1, E);
  return L;
}

template <class T>
Params<T> init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Params<T> p;
  p.config = config;
  p.layout = ParamLayout::build(config, &p.tensors);
  Rng rng(seed);
  for (std::size_t i = 0; i < p.tensors.count(); ++i) {
    const std::string& name = p.tensors.names[i];
    auto& t = p.tensors[i];
    const bool is_gain = name.ends_with(".g");
    const bool is_bias = name.ends_with(".b") || name.ends_with(".bx") || name.ends_with(".bq") ||
                         name.ends_with(".bk") || name.ends_with(".bv") || name.ends_with(".bo") ||
                         name.ends_with(".b1") || name.ends_with(".b2");
    if (is_gain) {
      t.fill(T(1));
    } else if (is_bias) {
      t.fill(T(0));
    } else {
      // Embedding rows use 1/sqrt(emb_dim); weight matrices 1/sqrt(fan_in).
      const double fan_in = name == "embedding" ? static_cast<double>(t.cols) : static_cast<double>(t.rows);
      const double stddev = 1.0 / std::sqrt(fan_in);
      for (auto& v : t.data) v = static_cast<T>(rng.normal() * stddev);
    }
  }
  return p;
}

void check_decoder_target(const TokenSequence& target) {
  if (target.empty()) throw std::invalid_argument("decoder target is empty");
  if (target.back() != kEos) throw std::invalid_argument("decoder target must end with EOS");
  if (std::count(target.begin(), target.end(), kEos) != 1) {
    throw std::invalid_argument("decoder target must contain exactly one EOS");
  }
}

// ---------------------------------------------------------------------------

template <class T>
ModelGraph<T>::ModelGraph(const Params<T>& params, TensorSet<T>* grads, bool grad_enabled)
    : params_(params), grads_(grads), graph_(grad_enabled), bound_(params.tensors.count()) {}

template <class T>
Var ModelGraph<T>::param(std::size_t index) {
  if (!bound_[index].valid()) {
    bound_[index] = graph_.param(params_.tensors[index], grads_ ? &(*grads_)[index] : nullptr);
  }
  return bound_[index];
}

template <class T>
Var ModelGraph<T>::zero_latent() {
  return graph_.constant(Matrix<T>(1, static_cast<std::size_t>(params_.config.z_dim)));
}

// Token embeddings scaled by sqrt(d) plus sinusoidal positions.
template <class T>
Var ModelGraph<T>::embed_positions(const TokenSequence& ids, std::size_t offset) {
  const std::size_t d = static_cast<std::size_t>(params_.config.emb_dim);
  Var x = graph_.scale(graph_.gather_rows(param(params_.layout.embedding), ids), static_cast<T>(std::sqrt(d)));
  Matrix<T> pe(ids.size(), d);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const double pos = static_cast<double>(t + offset);
    for (std::size_t i = 0; i < d; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d));
      pe(t, i) = static_cast<T>(std::sin(pos * freq));
      if (i + 1 < d) pe(t, i + 1) = static_cast<T>(std::cos(pos * freq));
    }
  }
  return graph_.add(x, graph_.constant(std::move(pe)));
}

// Post-norm block: LN(x + MHA(x)), then LN(. + FFN(.)).
template <class T>
Var ModelGraph<T>::transformer_block(Var x, const ParamLayout::Block& b, bool causal) {
  auto& g = graph_;
  const std::size_t d = static_cast<std::size_t>(params_.config.emb_dim);
  const std::size_t heads = static_cast<std::size_t>(params_.config.trf_heads);
  const std::size_t dk = d / heads;
  Var q = g.add_row(g.matmul(x, param(b.wq)), param(b.bq));
  Var k = g.add_row(g.matmul(x, param(b.wk)), param(b.bk));
  Var v = g.add_row(g.matmul(x, param(b.wv)), param(b.bv));
  std::vector<Var> outs;
  outs.reserve(heads);
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk)));
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = g.slice_cols(q, h * dk, dk);
    Var kh = g.slice_cols(k, h * dk, dk);
    Var vh = g.slice_cols(v, h * dk, dk);
    Var att = g.softmax_rows(g.scale(g.matmul_nt(qh, kh), inv_sqrt), causal);
    outs.push_back(g.matmul(att, vh));
  }
  Var mixed = g.add_row(g.matmul(g.concat_cols(outs), param(b.wo)), param(b.bo));
  Var x1 = g.layer_norm(g.add(x, mixed), param(b.ln1_g), param(b.ln1_b));
  Var ff = g.gelu(g.add_row(g.matmul(x1, param(b.w1)), param(b.b1)));
  ff = g.add_row(g.matmul(ff, param(b.w2)), param(b.b2));
  return g.layer_norm(g.add(x1, ff), param(b.ln2_g), param(b.ln2_b));
}

template <class T>
Var ModelGraph<T>::encode(const TokenSequence& input) {
  if (input.empty()) throw std::invalid_argument("encode: empty input");
  for (int id : input) {
    if (id < 0 || id >= params_.config.vocab_size) throw std::out_of_range("encode: token id out of range");
  }
  auto& g = graph_;
  const auto& L = params_.layout;
  Var h;
  if (params_.config.encoder == NetKind::kRnn) {
    const std::size_t H = static_cast<std::size_t>(params_.config.h_dim);
    Var x = g.gather_rows(param(L.embedding), input);
    Var h0 = g.constant(Matrix<T>(1, H));
    Var xf = g.add_row(g.matmul(x, param(L.enc_fw.wx)), param(L.enc_fw.bx));
    Var xb = g.add_row(g.matmul(x, param(L.enc_bw.wx)), param(L.enc_bw.bx));
    Var sf = g.gru_scan(xf, h0, param(L.enc_fw.urz), param(L.enc_fw.un), false);
    Var sb = g.gru_scan(xb, h0, param(L.enc_bw.urz), param(L.enc_bw.un), true);
    // Final forward state is the last row; the backward pass ends at row 0.
    const Var parts[] = {g.row(sf, input.size() - 1), g.row(sb, 0)};
    h = g.concat_cols(parts);
  } else {
    TokenSequence with_cls;
    with_cls.reserve(input.size() + 1);
    with_cls.push_back(kCls);
    with_cls.insert(with_cls.end(), input.begin(), input.end());
    Var x = embed_positions(with_cls, 0);
    for (const auto& b : L.enc_blocks) x = transformer_block(x, b, false);
    h = g.row(x, 0);
  }
  return g.add_row(g.matmul(h, param(L.enc_proj_w)), param(L.enc_proj_b));
}

template <class T>
Var ModelGraph<T>::rnn_decoder_states(Var z, const TokenSequence& inputs, Var h0) {
  auto& g = graph_;
  const auto& L = params_.layout;
  // [emb; z] * Wx == emb * Wx_e + z * Wx_z, with the z term shared by all steps.
  Var x = g.gather_rows(param(L.embedding), inputs);
  Var zrow = g.add(g.matmul(z, param(L.dec_wz)), param(L.dec_gru.bx));
  Var xp = g.add_row(g.matmul(x, param(L.dec_gru.wx)), zrow);
  return g.gru_scan(xp, h0, param(L.dec_gru.urz), param(L.dec_gru.un), false);
}

template <class T>
Var ModelGraph<T>::transformer_decoder_states(Var z, const TokenSequence& inputs) {
  auto& g = graph_;
  const auto& L = params_.layout;
  Var x = embed_positions(inputs, 0);
  x = g.add_row(x, g.matmul(z, param(L.dec_zproj)));
  for (const auto& b : L.dec_blocks) x = transformer_block(x, b, true);
  return x;
}

template <class T>
Var ModelGraph<T>::output_logits(Var states) {
  auto& g = graph_;
  const auto& L = params_.layout;
  Var out = g.add_row(g.matmul(states, param(L.dec_out_w)), param(L.dec_out_b));
  return g.matmul_nt(out, param(L.embedding));
}

template <class T>
Var ModelGraph<T>::decoder_logits(Var z, SequenceKind prompt, const TokenSequence& target) {
  TokenSequence inputs;
  inputs.reserve(target.size());
  inputs.push_back(prompt == SequenceKind::kSentence ? kBosSentence : kBosParagraph);
  inputs.insert(inputs.end(), target.begin(), target.end() - 1);
  Var states;
  if (params_.config.decoder == NetKind::kRnn) {
    Var h0 = graph_.constant(Matrix<T>(1, static_cast<std::size_t>(params_.config.h_dim)));
    states = rnn_decoder_states(z, inputs, h0);
  } else {
    states = transformer_decoder_states(z, inputs);
  }
  return output_logits(states);
}

template <class T>
Var ModelGraph<T>::nll(Var z, SequenceKind prompt, const TokenSequence& target) {
  check_decoder_target(target);
  for (int id : target) {
    if (id < 0 || id >= params_.config.vocab_size) throw std::out_of_range("nll: token id out of range");
  }
  return graph_.cross_entropy(decoder_logits(z, prompt, target), target);
}

// ---------------------------------------------------------------------------

template <class T>
LatentVector<T> encode(const Params<T>& params, const TokenSequence& input) {
  ModelGraph<T> mg(params, nullptr, false);
  return mg.graph().value(mg.encode(input)).data;
}

namespace {

template <class T>
int argmax_row(const Matrix<T>& m, std::size_t r) {
  auto row = m.row(r);
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

template <class T>
TokenSequence decode_greedy(const Params<T>& params, const LatentVector<T>& z, SequenceKind prompt,
                            std::optional<int> max_len) {
  const ModelConfig& cfg = params.config;
  const int cap = max_len.value_or(prompt == SequenceKind::kSentence ? cfg.max_len_sentence : cfg.max_len_paragraph);
  Matrix<T> zm(1, z.size());
  zm.data = z;
  TokenSequence inputs{prompt == SequenceKind::kSentence ? kBosSentence : kBosParagraph};
  TokenSequence out;
  Matrix<T> h(1, static_cast<std::size_t>(cfg.h_dim));
  while (static_cast<int>(out.size()) < cap) {
    ModelGraph<T> mg(params, nullptr, false);
    auto& g = mg.graph();
    Var zv = g.constant(zm);
    int next = 0;
    if (cfg.decoder == NetKind::kRnn) {
      // One step from the carried state.
      Var states = mg.rnn_decoder_states(zv, TokenSequence{inputs.back()}, g.constant(h));
      Var logits = mg.output_logits(states);
      h = g.value(states);
      next = argmax_row(g.value(logits), 0);
    } else {
      Var logits = mg.decoder_logits(zv, prompt, [&] {
        // decoder_logits drops the final target token, so pad with EOS.
        TokenSequence t(inputs.begin() + 1, inputs.end());
        t.push_back(kEos);
        return t;
      }());
      next = argmax_row(g.value(logits), inputs.size() - 1);
    }
    out.push_back(next);
    if (next == kEos) break;
    inputs.push_back(next);
  }
  return out;
}

template <class T>
NllResult<T> teacher_forced_nll(const Params<T>& params, const LatentVector<T>& z, SequenceKind prompt,
                                const TokenSequence& target, TensorSet<T>* grads) {
  if (z.size() != static_cast<std::size_t>(params.config.z_dim)) throw std::invalid_argument("z has wrong size");
  ModelGraph<T> mg(params, grads, true);
  Matrix<T> zm(1, z.size());
  zm.data = z;
  Var zv = mg.graph().leaf(std::move(zm));
  Var loss = mg.nll(zv, prompt, target);
  mg.graph().backward(loss);
  return {mg.graph().scalar(loss), mg.graph().grad(zv).data};
}

StoryExamples make_story_examples(const EncodedStory& story, const NoiseSpec& spec, Rng& rng) {
  StoryExamples ex;
  for (std::size_t i = 0; i < story.size(); ++i) ex.sentences.push_back(make_training_example(story, i, spec, rng));
  ex.paragraph = make_training_example(story, std::nullopt, spec, rng);
  return ex;
}

template <class T>
ReconstructionTerms<T> reconstruction_terms(ModelGraph<T>& mg, const StoryExamples& ex) {
  if (ex.sentences.empty()) throw std::invalid_argument("reconstruction: story has no sentences");
  auto& g = mg.graph();
  const ModelConfig& cfg = mg.config();
  ReconstructionTerms<T> terms;
  std::vector<Var> parts;
  for (const auto& s : ex.sentences) {
    Var z = mg.encode(s.encoder_input);
    terms.sentence_z.push_back(z);
    parts.push_back(mg.nll(z, SequenceKind::kSentence, s.clean_target));
  }
  Var sentence_sum = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) sentence_sum = g.add(sentence_sum, parts[i]);
  Var sentence_mean = g.scale(sentence_sum, static_cast<T>(1.0 / static_cast<double>(parts.size())));
  terms.paragraph_z = mg.encode(ex.paragraph.encoder_input);
  Var paragraph = mg.nll(terms.paragraph_z, SequenceKind::kParagraph, ex.paragraph.clean_target);
  terms.sentence_nll = g.scalar(sentence_mean);
  terms.paragraph_nll = g.scalar(paragraph);
  terms.loss = g.add(g.scale(sentence_mean, static_cast<T>(cfg.lambda_s)),
                     g.scale(paragraph, static_cast<T>(cfg.lambda_p)));
  return terms;
}

template <class T>
T reconstruction_loss(const Params<T>& params, const StoryExamples& ex, TensorSet<T>* grads) {
  ModelGraph<T> mg(params, grads, grads != nullptr);
  auto terms = reconstruction_terms(mg, ex);
  if (grads) mg.graph().backward(terms.loss);
  return mg.graph().scalar(terms.loss);
}

#define SUMMAE_INSTANTIATE(T)                                                                              \
  template ParamLayout ParamLayout::build<T>(const ModelConfig&, TensorSet<T>*);                          \
  template Params<T> init_params<T>(const ModelConfig&, std::uint64_t);                                   \
  template class ModelGraph<T>;                                                                           \
  template LatentVector<T> encode<T>(const Params<T>&, const TokenSequence&);                              \
  template TokenSequence decode_greedy<T>(const Params<T>&, const LatentVector<T>&, SequenceKind,          \
                                          std::optional<int>);                                             \
  template NllResult<T> teacher_forced_nll<T>(const Params<T>&, const LatentVector<T>&, SequenceKind,      \
                                              const TokenSequence&, TensorSet<T>*);                        \
  template ReconstructionTerms<T> reconstruction_terms<T>(ModelGraph<T>&, const StoryExamples&);           \
  template T reconstruction_loss<T>(const Params<T>&, const StoryExamples&, TensorSet<T>*);

SUMMAE_INSTANTIATE(float)
SUMMAE_INSTANTIATE(double)

#undef SUMMAE_INSTANTIATE

}  // namespace summae

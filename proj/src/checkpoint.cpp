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

#include "summae/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "summae/error.hpp"

namespace summae {
namespace {

constexpr char kMagic[4] = {'S', 'A', 'E', '1'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str64(const std::string& s) {
    u64(s.size());
    out_ += s;
  }
  std::string& data() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& s, std::size_t end) : s_(s), end_(end) {}
  void need(std::uint64_t n) {
    if (n > end_ - pos_) throw DataError("checkpoint is truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s_[pos_++])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::uint64_t n) {
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == end_; }

 private:
  const std::string& s_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::string& s, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto* p = reinterpret_cast<const Bytef*>(s.data());
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

template <class T>
void put_group(std::vector<std::pair<std::string, const Matrix<T>*>>& out, const std::string& prefix,
               const TensorSet<T>& set) {
  for (std::size_t i = 0; i < set.count(); ++i) out.emplace_back(prefix + set.names[i], &set[i]);
}

// Fills every tensor of `set` from the map, checking shapes.
void take_group(std::map<std::string, Matrix<double>>& tensors, const std::string& prefix, TensorSet<float>& set) {
  for (std::size_t i = 0; i < set.count(); ++i) {
    auto it = tensors.find(prefix + set.names[i]);
    if (it == tensors.end()) throw DataError("checkpoint is missing tensor " + prefix + set.names[i]);
    if (it->second.rows != set[i].rows || it->second.cols != set[i].cols)
      throw DataError("checkpoint tensor " + prefix + set.names[i] + " has the wrong shape");
    set[i] = it->second.cast<float>();
    tensors.erase(it);
  }
}

const std::string& meta_at(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw DataError("checkpoint metadata is missing " + key);
  return it->second;
}

long meta_long(const std::map<std::string, std::string>& meta, const std::string& key) {
  const std::string& v = meta_at(meta, key);
  try {
    return std::stol(v);
  } catch (const std::exception&) {
    throw DataError("checkpoint metadata " + key + " is not an integer");
  }
}

double meta_double(const std::map<std::string, std::string>& meta, const std::string& key) {
  const std::string& v = meta_at(meta, key);
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (end == v.c_str()) throw DataError("checkpoint metadata " + key + " is not a number");
  return out;
}

const char* const kAdamGroups[] = {"model", "critic", "cpp"};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const TrainingState& st = ckpt.state;
  std::ostringstream meta;
  for (const auto& [k, v] : st.params.config.to_map()) meta << "model." << k << '=' << v << '\n';
  for (const auto& [k, v] : ckpt.schedule.to_map()) meta << "train." << k << '=' << v << '\n';
  meta << "state.step=" << st.step << '\n'
       << "state.pretrain_done=" << st.pretrain_done << '\n'
       << "state.finetune_done=" << st.finetune_done << '\n'
       << "state.best_score=" << hexfloat(st.best_score) << '\n'
       << "state.evals_since_best=" << st.evals_since_best << '\n'
       << "state.stopped=" << (st.stopped ? 1 : 0) << '\n'
       << "state.has_best=" << (st.best_params.count() > 0 ? 1 : 0) << '\n'
       << "state.rng=" << st.rng.serialize() << '\n';
  const AdamState<float>* opts[] = {&st.opt_model, &st.opt_critic, &st.opt_cpp};
  for (int i = 0; i < 3; ++i) meta << "adam." << kAdamGroups[i] << ".step=" << opts[i]->step << '\n';

  std::vector<std::pair<std::string, const Matrix<float>*>> tensors;
  put_group(tensors, "params/", st.params.tensors);
  put_group(tensors, "critic/", st.critic.tensors);
  put_group(tensors, "cpp/", st.cpp_head.tensors);
  for (int i = 0; i < 3; ++i) {
    put_group(tensors, std::string("adam.") + kAdamGroups[i] + ".m/", opts[i]->m);
    put_group(tensors, std::string("adam.") + kAdamGroups[i] + ".v/", opts[i]->v);
  }
  put_group(tensors, "best/", st.best_params);

  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.str64(meta.str());
  w.u64(tensors.size());
  for (const auto& [name, m] : tensors) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u64(m->rows);
    w.u64(m->cols);
    for (float v : m->data) w.f64(static_cast<double>(v));
  }
  const std::uint32_t crc = crc32_of(w.data(), w.data().size());
  w.u32(crc);
  return std::move(w.data());
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError("not a summae checkpoint");
  const std::size_t body = bytes.size() - 4;
  {
    Reader r(bytes, bytes.size());
    r.str(body);
    if (r.u32() != crc32_of(bytes, body)) throw DataError("checkpoint CRC mismatch (file is corrupt)");
  }
  Reader r(bytes, body);
  r.str(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw DataError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");

  std::map<std::string, std::string> meta;
  {
    std::istringstream is(r.str(r.u64()));
    std::string line;
    while (std::getline(is, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw DataError("checkpoint metadata line without '='");
      meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  std::map<std::string, std::string> model_kv, train_kv;
  for (const auto& [k, v] : meta) {
    if (k.rfind("model.", 0) == 0) model_kv[k.substr(6)] = v;
    if (k.rfind("train.", 0) == 0) train_kv[k.substr(6)] = v;
  }

  std::map<std::string, Matrix<double>> tensors;
  const std::uint64_t n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string name = r.str(r.u32());
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (cols != 0 && rows > (UINT64_MAX / 8) / cols) throw DataError("checkpoint tensor " + name + " is too large");
    r.need(rows * cols * 8);
    Matrix<double> m(rows, cols);
    for (auto& v : m.data) v = r.f64();
    tensors.emplace(std::move(name), std::move(m));
  }
  if (!r.done()) throw DataError("checkpoint has trailing bytes");

  Checkpoint ckpt;
  try {
    ckpt.schedule = TrainSchedule::from_map(train_kv);
    const ModelConfig cfg = ModelConfig::from_map(model_kv);
    TrainingState& st = ckpt.state;
    st.params.config = cfg;
    st.params.layout = ParamLayout::build<float>(cfg, &st.params.tensors);
    st.critic = Critic<float>::init(cfg.z_dim, ckpt.schedule.critic_hidden, 0);
    st.cpp_head = LogisticHead<float>::init(cfg.z_dim);
    st.opt_model = AdamState<float>::like(st.params.tensors);
    st.opt_critic = AdamState<float>::like(st.critic.tensors);
    st.opt_cpp = AdamState<float>::like(st.cpp_head.tensors);
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint config: ") + e.what());
  }
  TrainingState& st = ckpt.state;
  take_group(tensors, "params/", st.params.tensors);
  take_group(tensors, "critic/", st.critic.tensors);
  take_group(tensors, "cpp/", st.cpp_head.tensors);
  AdamState<float>* opts[] = {&st.opt_model, &st.opt_critic, &st.opt_cpp};
  for (int i = 0; i < 3; ++i) {
    take_group(tensors, std::string("adam.") + kAdamGroups[i] + ".m/", opts[i]->m);
    take_group(tensors, std::string("adam.") + kAdamGroups[i] + ".v/", opts[i]->v);
    opts[i]->step = meta_long(meta, std::string("adam.") + kAdamGroups[i] + ".step");
  }
  if (meta_long(meta, "state.has_best")) {
    st.best_params = st.params.tensors.zeros_like();
    take_group(tensors, "best/", st.best_params);
  }
  if (!tensors.empty()) throw DataError("checkpoint has unexpected tensor " + tensors.begin()->first);
  st.step = meta_long(meta, "state.step");
  st.pretrain_done = meta_long(meta, "state.pretrain_done");
  st.finetune_done = meta_long(meta, "state.finetune_done");
  st.best_score = meta_double(meta, "state.best_score");
  st.evals_since_best = static_cast<int>(meta_long(meta, "state.evals_since_best"));
  st.stopped = meta_long(meta, "state.stopped") != 0;
  st.rng = Rng::deserialize(meta_at(meta, "state.rng"));
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing checkpoint " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw DataError("cannot move checkpoint into place: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

Params<float> load_model(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  Params<float> p = std::move(ckpt.state.params);
  if (ckpt.state.best_params.count() == p.tensors.count()) p.tensors = std::move(ckpt.state.best_params);
  return p;
}

}  // namespace summae

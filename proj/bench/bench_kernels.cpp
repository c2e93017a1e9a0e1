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


// Serial reference kernels against their OpenMP versions, plus one training
// step at different thread counts.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "summae/kernels.hpp"
#include "summae/random.hpp"
#include "summae/subword.hpp"
#include "summae/trainer.hpp"
#include "synthetic.hpp"

namespace {

using namespace summae;

std::vector<float> random_matrix(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return v;
}

template <void (*Gemm)(const float*, const float*, float*, std::size_t, std::size_t, std::size_t)>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n * n, 1);
  const auto b = random_matrix(n * n, 2);
  std::vector<float> c(n * n);
  for (auto _ : state) {
    std::fill(c.begin(), c.end(), 0.0f);
    Gemm(a.data(), b.data(), c.data(), n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

BENCHMARK(BM_Gemm<kernels::serial::gemm_nn<float>>)->Name("gemm_nn/serial")->RangeMultiplier(4)->Range(32, 512);
BENCHMARK(BM_Gemm<kernels::parallel::gemm_nn<float>>)->Name("gemm_nn/parallel")->RangeMultiplier(4)->Range(32, 512);
BENCHMARK(BM_Gemm<kernels::serial::gemm_nt<float>>)->Name("gemm_nt/serial")->RangeMultiplier(4)->Range(32, 512);
BENCHMARK(BM_Gemm<kernels::parallel::gemm_nt<float>>)->Name("gemm_nt/parallel")->RangeMultiplier(4)->Range(32, 512);
BENCHMARK(BM_Gemm<kernels::serial::gemm_tn<float>>)->Name("gemm_tn/serial")->RangeMultiplier(4)->Range(32, 512);
BENCHMARK(BM_Gemm<kernels::parallel::gemm_tn<float>>)->Name("gemm_tn/parallel")->RangeMultiplier(4)->Range(32, 512);

// One desk-scale fine-tune step (batch 32) with the given thread count.
void BM_FinetuneStep(benchmark::State& state) {
  static const auto corpus = testing::make_synthetic_corpus(256, 1);
  static const Vocab vocab = train_vocab(corpus.stories, 400);
  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.emb_dim = 32;
  mc.h_dim = 64;
  mc.z_dim = 32;
  TrainSchedule ts;
  ts.pretrain_steps = 0;
  ts.batch_size = 32;
  Trainer trainer(mc, ts, vocab, corpus.stories);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(trainer.finetune_step().loss);
  omp_set_num_threads(saved);
  state.SetItemsProcessed(state.iterations() * ts.batch_size);
}

BENCHMARK(BM_FinetuneStep)->Name("finetune_step/threads")->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

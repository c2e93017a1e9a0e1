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

#include "doctest.h"
#include "summae/kernels.hpp"
#include "summae/random.hpp"

using namespace summae;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("serial products match the definition") {
    Rng rng(1);
    const std::size_t m = 3, k = 4, n = 5;
    auto a = random_vec(m * k, rng), b = random_vec(k * n, rng), bt = random_vec(n * k, rng),
         at = random_vec(k * m, rng);
    std::vector<double> c(m * n, 1.0), ct(m * n, 1.0), tc(m * n, 1.0);
    kernels::serial::gemm_nn(a.data(), b.data(), c.data(), m, k, n);
    kernels::serial::gemm_nt(a.data(), bt.data(), ct.data(), m, k, n);
    kernels::serial::gemm_tn(at.data(), b.data(), tc.data(), m, k, n);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double nn = 1.0, nt = 1.0, tn = 1.0;
        for (std::size_t p = 0; p < k; ++p) {
          nn += a[i * k + p] * b[p * n + j];
          nt += a[i * k + p] * bt[j * k + p];
          tn += at[p * m + i] * b[p * n + j];
        }
        CHECK(c[i * n + j] == doctest::Approx(nn).epsilon(1e-12));
        CHECK(ct[i * n + j] == doctest::Approx(nt).epsilon(1e-12));
        CHECK(tc[i * n + j] == doctest::Approx(tn).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("parallel products are bit-identical to serial ones") {
    Rng rng(2);
    for (auto [m, k, n] : {std::tuple<std::size_t, std::size_t, std::size_t>{1, 7, 3}, {64, 33, 65}, {129, 64, 17}}) {
      auto a = random_vec(m * k, rng), b = random_vec(k * n, rng), bt = random_vec(n * k, rng),
           at = random_vec(k * m, rng);
      for (int op = 0; op < 3; ++op) {
        std::vector<double> s(m * n, 0.5), p(m * n, 0.5);
        switch (op) {
          case 0:
            kernels::serial::gemm_nn(a.data(), b.data(), s.data(), m, k, n);
            kernels::parallel::gemm_nn(a.data(), b.data(), p.data(), m, k, n);
            break;
          case 1:
            kernels::serial::gemm_nt(a.data(), bt.data(), s.data(), m, k, n);
            kernels::parallel::gemm_nt(a.data(), bt.data(), p.data(), m, k, n);
            break;
          default:
            kernels::serial::gemm_tn(at.data(), b.data(), s.data(), m, k, n);
            kernels::parallel::gemm_tn(at.data(), b.data(), p.data(), m, k, n);
        }
        CHECK(s == p);
      }
      std::vector<float> af(a.begin(), a.end()), bf(b.begin(), b.end());
      std::vector<float> sf(m * n, 0.0f), pf(m * n, 0.0f), df(m * n, 0.0f);
      kernels::serial::gemm_nn(af.data(), bf.data(), sf.data(), m, k, n);
      kernels::parallel::gemm_nn(af.data(), bf.data(), pf.data(), m, k, n);
      kernels::gemm_nn(af.data(), bf.data(), df.data(), m, k, n);
      CHECK(sf == pf);
      CHECK(sf == df);
    }
  }
}

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

// Reverse-mode automatic differentiation over dense matrices.
//
// A Graph records operations as they are evaluated (eager forward) and
// replays their adjoints in reverse on backward(). Parameters are bound by
// reference: their values are read in place and their gradients accumulate
// directly into a caller-owned buffer, so one Graph per example and one
// gradient buffer per worker is all the bookkeeping training needs.

#ifndef SUMMAE_AUTOGRAD_HPP_
#define SUMMAE_AUTOGRAD_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "summae/kernels.hpp"
#include "summae/tensor.hpp"

namespace summae {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

template <class T>
class Graph {
 public:
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t node_count() const { return nodes_.size(); }

  void clear() { nodes_.clear(); }

  // ---- leaves ------------------------------------------------------------

  Var constant(Matrix<T> m) { return push(std::move(m), false); }

  // Owned leaf whose gradient can be read back with grad().
  Var leaf(Matrix<T> m) { return push(std::move(m), grad_enabled_); }

  // Externally stored parameter. A null grad sink makes it a constant.
  Var param(const Matrix<T>& value, Matrix<T>* grad_sink) {
    Node n;
    n.ext_value = &value;
    n.ext_grad = grad_enabled_ ? grad_sink : nullptr;
    n.needs_grad = n.ext_grad != nullptr;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
  }

  const Matrix<T>& value(Var v) const { return nodes_[v.id].val(); }

  // Gradient of the last backward() target w.r.t. v (zeros if untouched).
  Matrix<T> grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (n.ext_grad) return *n.ext_grad;
    if (n.grad.empty()) return Matrix<T>(n.val().rows, n.val().cols);
    return n.grad;
  }

  T scalar(Var v) const { return value(v).data.at(0); }

  // ---- linear algebra ----------------------------------------------------

  // a[m x k] * b[k x n]
  Var matmul(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    check(A.cols == B.rows, "matmul: inner dimensions differ");
    const std::size_t m = A.rows, k = A.cols, n = B.cols;
    Matrix<T> out(m, n);
    kernels::gemm_nn(A.data.data(), B.data.data(), out.data.data(), m, k, n);
    Var r = push(std::move(out), any_grad(a, b));
    if (needs(r)) {
      set_backward(r, [this, a, b, r, m, k, n] {
        const auto& dC = nodes_[r.id].grad;
        if (needs(a)) kernels::gemm_nt(dC.data.data(), value(b).data.data(), gref(a).data.data(), m, n, k);
        if (needs(b)) kernels::gemm_tn(value(a).data.data(), dC.data.data(), gref(b).data.data(), k, m, n);
      });
    }
    return r;
  }

  // a[m x k] * b[n x k]^T
  Var matmul_nt(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    check(A.cols == B.cols, "matmul_nt: inner dimensions differ");
    const std::size_t m = A.rows, k = A.cols, n = B.rows;
    Matrix<T> out(m, n);
    kernels::gemm_nt(A.data.data(), B.data.data(), out.data.data(), m, k, n);
    Var r = push(std::move(out), any_grad(a, b));
    if (needs(r)) {
      set_backward(r, [this, a, b, r, m, k, n] {
        const auto& dC = nodes_[r.id].grad;
        if (needs(a)) kernels::gemm_nn(dC.data.data(), value(b).data.data(), gref(a).data.data(), m, n, k);
        if (needs(b)) kernels::gemm_tn(dC.data.data(), value(a).data.data(), gref(b).data.data(), n, m, k);
      });
    }
    return r;
  }

  // ---- elementwise -------------------------------------------------------

  Var add(Var a, Var b) {
    check(value(a).same_shape(value(b)), "add: shape mismatch");
    Matrix<T> out = value(a);
    const auto& B = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += B.data[i];
    Var r = push(std::move(out), any_grad(a, b));
    if (needs(r)) {
      set_backward(r, [this, a, b, r] {
        const auto& g = nodes_[r.id].grad;
        if (needs(a)) axpy(T(1), g, gref(a));
        if (needs(b)) axpy(T(1), g, gref(b));
      });
    }
    return r;
  }

  Var sub(Var a, Var b) {
    check(value(a).same_shape(value(b)), "sub: shape mismatch");
    Matrix<T> out = value(a);
    const auto& B = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= B.data[i];
    Var r = push(std::move(out), any_grad(a, b));
    if (needs(r)) {
      set_backward(r, [this, a, b, r] {
        const auto& g = nodes_[r.id].grad;
        if (needs(a)) axpy(T(1), g, gref(a));
        if (needs(b)) axpy(T(-1), g, gref(b));
      });
    }
    return r;
  }

  // Hadamard product.
  Var mul(Var a, Var b) {
    check(value(a).same_shape(value(b)), "mul: shape mismatch");
    Matrix<T> out = value(a);
    const auto& B = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= B.data[i];
    Var r = push(std::move(out), any_grad(a, b));
    if (needs(r)) {
      set_backward(r, [this, a, b, r] {
        const auto& g = nodes_[r.id].grad;
        if (needs(a)) {
          auto& ga = gref(a);
          const auto& B = value(b);
          for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * B.data[i];
        }
        if (needs(b)) {
          auto& gb = gref(b);
          const auto& A = value(a);
          for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * A.data[i];
        }
      });
    }
    return r;
  }

  Var scale(Var a, T s) {
    Matrix<T> out = value(a);
    for (auto& v : out.data) v *= s;
    Var r = push(std::move(out), any_grad(a));
    if (needs(r)) {
      set_backward(r, [this, a, r, s] { axpy(s, nodes_[r.id].grad, gref(a)); });
    }
    return r;
  }

  // x[m x n] + row[1 x n] broadcast over rows.
  Var add_row(Var x, Var row) {
    const auto& X = value(x);
    const auto& R = value(row);
    check(R.rows == 1 && R.cols == X.cols, "add_row: shape mismatch");
    Matrix<T> out = X;
    for (std::size_t i = 0; i < out.rows; ++i)
      for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += R.data[j];
    Var r = push(std::move(out), any_grad(x, row));
    if (needs(r)) {
      set_backward(r, [this, x, row, r] {
        const auto& g = nodes_[r.id].grad;
        if (needs(x)) axpy(T(1), g, gref(x));
        if (needs(row)) {
          auto& gr = gref(row);
          for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j) gr.data[j] += g(i, j);
        }
      });
    }
    return r;
  }

  Var sigmoid(Var a) {
    return unary(a, [](T x) { return stable_sigmoid(x); },
                 [](T, T y) { return y * (T(1) - y); });
  }

  Var tanh(Var a) {
    return unary(a, [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
  }

  Var relu(Var a) {
    return unary(a, [](T x) { return x > T(0) ? x : T(0); },
                 [](T x, T) { return x > T(0) ? T(1) : T(0); });
  }

  // Exact (erf) GELU. Smooth, so finite-difference checks see no kinks.
  Var gelu(Var a) {
    return unary(a, [](T x) { return T(0.5) * x * (T(1) + std::erf(x * T(std::numbers::sqrt2 / 2))); },
                 [](T x, T) {
                   const T cdf = T(0.5) * (T(1) + std::erf(x * T(std::numbers::sqrt2 / 2)));
                   const T pdf = std::exp(T(-0.5) * x * x) * T(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
                   return cdf + x * pdf;
                 });
  }

  // Sum of all entries, as a 1 x 1.
  Var sum(Var a) {
    T s = T(0);
    for (T v : value(a).data) s += v;
    Var r = push(Matrix<T>(1, 1, s), any_grad(a));
    if (needs(r)) {
      set_backward(r, [this, a, r] {
        const T g = nodes_[r.id].grad.data[0];
        for (auto& v : gref(a).data) v += g;
      });
    }
    return r;
  }

  // ---- indexing ----------------------------------------------------------

  // Rows of table selected by ids (embedding lookup).
  Var gather_rows(Var table, std::span<const int> ids) {
    const auto& W = value(table);
    Matrix<T> out(ids.size(), W.cols);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      check(ids[i] >= 0 && static_cast<std::size_t>(ids[i]) < W.rows, "gather_rows: id out of range");
      auto src = W.row(static_cast<std::size_t>(ids[i]));
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    Var r = push(std::move(out), any_grad(table));
    if (needs(r)) {
      std::vector<int> idv(ids.begin(), ids.end());
      set_backward(r, [this, table, r, idv = std::move(idv)] {
        const auto& g = nodes_[r.id].grad;
        auto& gw = gref(table);
        for (std::size_t i = 0; i < idv.size(); ++i) {
          auto dst = gw.row(static_cast<std::size_t>(idv[i]));
          auto src = g.row(i);
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
      });
    }
    return r;
  }

  Var row(Var x, std::size_t index) { return slice_rows(x, index, 1); }

  Var slice_rows(Var x, std::size_t begin, std::size_t count) {
    const auto& X = value(x);
    check(begin + count <= X.rows, "slice_rows: out of range");
    Matrix<T> out(count, X.cols);
    std::copy(X.data.begin() + static_cast<std::ptrdiff_t>(begin * X.cols),
              X.data.begin() + static_cast<std::ptrdiff_t>((begin + count) * X.cols), out.data.begin());
    Var r = push(std::move(out), any_grad(x));
    if (needs(r)) {
      set_backward(r, [this, x, r, begin] {
        const auto& g = nodes_[r.id].grad;
        auto& gx = gref(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx.data[begin * g.cols + i] += g.data[i];
      });
    }
    return r;
  }

  Var slice_cols(Var x, std::size_t begin, std::size_t count) {
    const auto& X = value(x);
    check(begin + count <= X.cols, "slice_cols: out of range");
    Matrix<T> out(X.rows, count);
    for (std::size_t i = 0; i < X.rows; ++i)
      for (std::size_t j = 0; j < count; ++j) out(i, j) = X(i, begin + j);
    Var r = push(std::move(out), any_grad(x));
    if (needs(r)) {
      set_backward(r, [this, x, r, begin, count] {
        const auto& g = nodes_[r.id].grad;
        auto& gx = gref(x);
        for (std::size_t i = 0; i < g.rows; ++i)
          for (std::size_t j = 0; j < count; ++j) gx(i, begin + j) += g(i, j);
      });
    }
    return r;
  }

  Var concat_cols(std::span<const Var> parts) {
    check(!parts.empty(), "concat_cols: no inputs");
    const std::size_t rows = value(parts[0]).rows;
    std::size_t cols = 0;
    bool grad = false;
    for (Var p : parts) {
      check(value(p).rows == rows, "concat_cols: row mismatch");
      cols += value(p).cols;
      grad = grad || needs(p);
    }
    Matrix<T> out(rows, cols);
    std::size_t off = 0;
    for (Var p : parts) {
      const auto& P = value(p);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < P.cols; ++j) out(i, off + j) = P(i, j);
      off += P.cols;
    }
    Var r = push(std::move(out), grad && grad_enabled_);
    if (needs(r)) {
      std::vector<Var> pv(parts.begin(), parts.end());
      set_backward(r, [this, r, pv = std::move(pv)] {
        const auto& g = nodes_[r.id].grad;
        std::size_t off = 0;
        for (Var p : pv) {
          const std::size_t pc = value(p).cols;
          if (needs(p)) {
            auto& gp = gref(p);
            for (std::size_t i = 0; i < g.rows; ++i)
              for (std::size_t j = 0; j < pc; ++j) gp(i, j) += g(i, off + j);
          }
          off += pc;
        }
      });
    }
    return r;
  }

  // ---- normalization and attention ----------------------------------------

  // Row-wise layer normalization with gain and bias rows (1 x n).
  Var layer_norm(Var x, Var gain, Var bias, T eps = T(1e-5)) {
    const auto& X = value(x);
    const auto& G = value(gain);
    const auto& B = value(bias);
    check(G.cols == X.cols && B.cols == X.cols, "layer_norm: shape mismatch");
    const std::size_t n = X.cols;
    Matrix<T> out(X.rows, n);
    Matrix<T> xhat(X.rows, n);
    std::vector<T> inv_std(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) {
      T mean = T(0);
      for (std::size_t j = 0; j < n; ++j) mean += X(i, j);
      mean /= static_cast<T>(n);
      T var = T(0);
      for (std::size_t j = 0; j < n; ++j) var += (X(i, j) - mean) * (X(i, j) - mean);
      var /= static_cast<T>(n);
      inv_std[i] = T(1) / std::sqrt(var + eps);
      for (std::size_t j = 0; j < n; ++j) {
        xhat(i, j) = (X(i, j) - mean) * inv_std[i];
        out(i, j) = G.data[j] * xhat(i, j) + B.data[j];
      }
    }
    Var r = push(std::move(out), any_grad(x, gain, bias));
    if (needs(r)) {
      set_backward(r, [this, x, gain, bias, r, n, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
        const auto& g = nodes_[r.id].grad;
        const auto& G = value(gain);
        if (needs(gain) || needs(bias)) {
          for (std::size_t i = 0; i < g.rows; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
              if (needs(gain)) gref(gain).data[j] += g(i, j) * xhat(i, j);
              if (needs(bias)) gref(bias).data[j] += g(i, j);
            }
          }
        }
        if (needs(x)) {
          auto& gx = gref(x);
          for (std::size_t i = 0; i < g.rows; ++i) {
            T mean_d = T(0), mean_dx = T(0);
            for (std::size_t j = 0; j < n; ++j) {
              const T d = g(i, j) * G.data[j];
              mean_d += d;
              mean_dx += d * xhat(i, j);
            }
            mean_d /= static_cast<T>(n);
            mean_dx /= static_cast<T>(n);
            for (std::size_t j = 0; j < n; ++j) {
              const T d = g(i, j) * G.data[j];
              gx(i, j) += inv_std[i] * (d - mean_d - xhat(i, j) * mean_dx);
            }
          }
        }
      });
    }
    return r;
  }

  // Row-wise softmax. With causal=true, entry (i, j) is masked out for j > i.
  Var softmax_rows(Var x, bool causal) {
    const auto& X = value(x);
    Matrix<T> out(X.rows, X.cols);
    for (std::size_t i = 0; i < X.rows; ++i) {
      const std::size_t width = causal ? std::min(X.cols, i + 1) : X.cols;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < width; ++j) mx = std::max(mx, X(i, j));
      T s = T(0);
      for (std::size_t j = 0; j < width; ++j) {
        out(i, j) = std::exp(X(i, j) - mx);
        s += out(i, j);
      }
      for (std::size_t j = 0; j < width; ++j) out(i, j) /= s;
    }
    Var r = push(std::move(out), any_grad(x));
    if (needs(r)) {
      set_backward(r, [this, x, r] {
        const auto& g = nodes_[r.id].grad;
        const auto& P = value(r);
        auto& gx = gref(x);
        for (std::size_t i = 0; i < P.rows; ++i) {
          T dot = T(0);
          for (std::size_t j = 0; j < P.cols; ++j) dot += P(i, j) * g(i, j);
          for (std::size_t j = 0; j < P.cols; ++j) gx(i, j) += P(i, j) * (g(i, j) - dot);
        }
      });
    }
    return r;
  }

  // ---- losses ------------------------------------------------------------

  // Mean over rows of -log softmax(logits[t])[targets[t]], as a 1 x 1.
  Var cross_entropy(Var logits, std::span<const int> targets) {
    const auto& L = value(logits);
    check(L.rows == targets.size() && L.rows > 0, "cross_entropy: target count mismatch");
    Matrix<T> probs(L.rows, L.cols);
    T total = T(0);
    for (std::size_t t = 0; t < L.rows; ++t) {
      const auto y = static_cast<std::size_t>(targets[t]);
      check(y < L.cols, "cross_entropy: target out of range");
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < L.cols; ++j) mx = std::max(mx, L(t, j));
      T s = T(0);
      for (std::size_t j = 0; j < L.cols; ++j) {
        probs(t, j) = std::exp(L(t, j) - mx);
        s += probs(t, j);
      }
      const T lse = mx + std::log(s);
      total += lse - L(t, y);
      for (std::size_t j = 0; j < L.cols; ++j) probs(t, j) /= s;
    }
    const T inv_n = T(1) / static_cast<T>(L.rows);
    Var r = push(Matrix<T>(1, 1, total * inv_n), any_grad(logits));
    if (needs(r)) {
      std::vector<int> tv(targets.begin(), targets.end());
      set_backward(r, [this, logits, r, inv_n, probs = std::move(probs), tv = std::move(tv)] {
        const T g = nodes_[r.id].grad.data[0] * inv_n;
        auto& gl = gref(logits);
        for (std::size_t t = 0; t < probs.rows; ++t) {
          for (std::size_t j = 0; j < probs.cols; ++j) gl(t, j) += g * probs(t, j);
          gl(t, static_cast<std::size_t>(tv[t])) -= g;
        }
      });
    }
    return r;
  }

  // Binary cross-entropy of sigmoid(logit) against label in {0, 1}, 1 x 1.
  Var bce_with_logits(Var logit, T label) {
    check(value(logit).size() == 1, "bce_with_logits: expected a scalar");
    const T x = value(logit).data[0];
    // softplus(x) - label * x, evaluated without overflow.
    const T softplus = x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    Var r = push(Matrix<T>(1, 1, softplus - label * x), any_grad(logit));
    if (needs(r)) {
      set_backward(r, [this, logit, r, x, label] {
        gref(logit).data[0] += nodes_[r.id].grad.data[0] * (stable_sigmoid(x) - label);
      });
    }
    return r;
  }

  // ---- recurrent ---------------------------------------------------------

  // Gated recurrent unit over a whole sequence.
  //
  // xproj[T x 3H] holds the input projections (plus bias) for the reset,
  // update and candidate gates, in that order. Per step:
  //   r = sigmoid(x_r + h U_r),  u = sigmoid(x_u + h U_u)
  //   n = tanh(x_n + (r * h) U_n)
  //   h' = (1 - u) * n + u * h
  // Output row t is the state after consuming input t. With reverse=true
  // the inputs are consumed from the last row to the first.
  Var gru_scan(Var xproj, Var h0, Var u_rz, Var u_n, bool reverse) {
    const auto& X = value(xproj);
    const auto& H0 = value(h0);
    const auto& Urz = value(u_rz);
    const auto& Un = value(u_n);
    const std::size_t hd = H0.cols;
    const std::size_t steps = X.rows;
    check(H0.rows == 1 && X.cols == 3 * hd, "gru_scan: xproj must be T x 3H");
    check(Urz.rows == hd && Urz.cols == 2 * hd && Un.rows == hd && Un.cols == hd,
          "gru_scan: recurrent weight shape");

    Matrix<T> out(steps, hd);
    // Per step: r, u, n, h_prev (each H wide).
    Matrix<T> cache(steps, 4 * hd);
    std::vector<T> h(H0.data.begin(), H0.data.end());
    std::vector<T> a(2 * hd), rh(hd), c(hd);
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t t = reverse ? steps - 1 - s : s;
      std::fill(a.begin(), a.end(), T(0));
      kernels::gemm_nn(h.data(), Urz.data.data(), a.data(), 1, hd, 2 * hd);
      T* cr = &cache(t, 0);
      T* cu = cr + hd;
      T* cn = cu + hd;
      T* ch = cn + hd;
      for (std::size_t j = 0; j < hd; ++j) {
        cr[j] = stable_sigmoid(X(t, j) + a[j]);
        cu[j] = stable_sigmoid(X(t, hd + j) + a[hd + j]);
        ch[j] = h[j];
        rh[j] = cr[j] * h[j];
      }
      std::fill(c.begin(), c.end(), T(0));
      kernels::gemm_nn(rh.data(), Un.data.data(), c.data(), 1, hd, hd);
      for (std::size_t j = 0; j < hd; ++j) {
        cn[j] = std::tanh(X(t, 2 * hd + j) + c[j]);
        h[j] = (T(1) - cu[j]) * cn[j] + cu[j] * h[j];
        out(t, j) = h[j];
      }
    }
    Var r = push(std::move(out), any_grad(xproj, h0, u_rz, u_n));
    if (needs(r)) {
      set_backward(r, [this, xproj, h0, u_rz, u_n, r, hd, steps, reverse, cache = std::move(cache)] {
        const auto& g = nodes_[r.id].grad;
        const auto& Urz = value(u_rz);
        const auto& Un = value(u_n);
        Matrix<T>* gx = needs(xproj) ? &gref(xproj) : nullptr;
        Matrix<T>* gurz = needs(u_rz) ? &gref(u_rz) : nullptr;
        Matrix<T>* gun = needs(u_n) ? &gref(u_n) : nullptr;
        std::vector<T> carry(hd, T(0)), dh(hd), dhp(hd), dc(hd), drh(hd), da(2 * hd), rh(hd);
        for (std::size_t s = 0; s < steps; ++s) {
          // Walk back through processing order.
          const std::size_t t = reverse ? s : steps - 1 - s;
          const T* cr = &cache(t, 0);
          const T* cu = cr + hd;
          const T* cn = cu + hd;
          const T* ch = cn + hd;
          for (std::size_t j = 0; j < hd; ++j) {
            dh[j] = g(t, j) + carry[j];
            const T dn = dh[j] * (T(1) - cu[j]);
            const T du = dh[j] * (ch[j] - cn[j]);
            dhp[j] = dh[j] * cu[j];
            dc[j] = dn * (T(1) - cn[j] * cn[j]);
            da[hd + j] = du * cu[j] * (T(1) - cu[j]);
            rh[j] = cr[j] * ch[j];
          }
          // Candidate path: c = (r * h) U_n.
          if (gun) kernels::gemm_tn(rh.data(), dc.data(), gun->data.data(), hd, 1, hd);
          std::fill(drh.begin(), drh.end(), T(0));
          kernels::gemm_nt(dc.data(), Un.data.data(), drh.data(), 1, hd, hd);
          for (std::size_t j = 0; j < hd; ++j) {
            const T dr = drh[j] * ch[j];
            dhp[j] += drh[j] * cr[j];
            da[j] = dr * cr[j] * (T(1) - cr[j]);
          }
          if (gx) {
            for (std::size_t j = 0; j < hd; ++j) {
              (*gx)(t, j) += da[j];
              (*gx)(t, hd + j) += da[hd + j];
              (*gx)(t, 2 * hd + j) += dc[j];
            }
          }
          // Gate path: a = h U_rz.
          if (gurz) kernels::gemm_tn(ch, da.data(), gurz->data.data(), hd, 1, 2 * hd);
          kernels::gemm_nt(da.data(), Urz.data.data(), dhp.data(), 1, 2 * hd, hd);
          carry = dhp;
        }
        if (needs(h0)) {
          auto& gh = gref(h0);
          for (std::size_t j = 0; j < hd; ++j) gh.data[j] += carry[j];
        }
      });
    }
    return r;
  }

  // ---- backward ----------------------------------------------------------

  // Accumulates d(loss)/d(node) into every node that requires a gradient.
  // loss must be 1 x 1.
  void backward(Var loss) {
    check(value(loss).size() == 1, "backward: loss must be a scalar");
    if (!needs(loss)) return;
    gref(loss).data[0] += T(1);
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (!n.needs_grad || !n.backward || n.grad.empty()) continue;
      n.backward();
    }
  }

  static T stable_sigmoid(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
  }

 private:
  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    const Matrix<T>* ext_value = nullptr;
    Matrix<T>* ext_grad = nullptr;
    bool needs_grad = false;
    std::function<void()> backward;

    const Matrix<T>& val() const { return ext_value ? *ext_value : value; }
  };

  static void check(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  }

  static void axpy(T alpha, const Matrix<T>& x, Matrix<T>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y.data[i] += alpha * x.data[i];
  }

  Var push(Matrix<T> m, bool needs_grad) {
    Node n;
    n.value = std::move(m);
    n.needs_grad = needs_grad && grad_enabled_;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
  }

  bool needs(Var v) const { return nodes_[v.id].needs_grad; }

  template <class... Vs>
  bool any_grad(Vs... vs) const {
    return grad_enabled_ && (needs(vs) || ...);
  }

  template <class F>
  void set_backward(Var v, F&& f) {
    nodes_[v.id].backward = std::forward<F>(f);
  }

  Matrix<T>& gref(Var v) {
    Node& n = nodes_[v.id];
    if (n.ext_grad) return *n.ext_grad;
    if (n.grad.empty()) n.grad = Matrix<T>(n.val().rows, n.val().cols);
    return n.grad;
  }

  template <class F, class D>
  Var unary(Var a, F f, D df) {
    Matrix<T> out = value(a);
    for (auto& v : out.data) v = f(v);
    Var r = push(std::move(out), any_grad(a));
    if (needs(r)) {
      set_backward(r, [this, a, r, df] {
        const auto& g = nodes_[r.id].grad;
        const auto& X = value(a);
        const auto& Y = value(r);
        auto& ga = gref(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * df(X.data[i], Y.data[i]);
      });
    }
    return r;
  }

  bool grad_enabled_;
  std::vector<Node> nodes_;
};

}  // namespace summae

#endif  // SUMMAE_AUTOGRAD_HPP_

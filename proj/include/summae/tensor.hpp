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

#ifndef SUMMAE_TENSOR_HPP_
#define SUMMAE_TENSOR_HPP_

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace summae {

/// Dense row-major matrix. Vectors are 1 x n matrices.
template <class T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    return std::all_of(data.begin(), data.end(), [](T v) { return std::isfinite(v); });
  }

  template <class U>
  Matrix<U> cast() const {
    Matrix<U> out(rows, cols);
    std::transform(data.begin(), data.end(), out.data.begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  bool operator==(const Matrix&) const = default;
};

/// A named, ordered collection of matrices. Used for model parameters,
/// their gradients, and optimizer moments, which all share one layout.
template <class T>
struct TensorSet {
  std::vector<std::string> names;
  std::vector<Matrix<T>> tensors;

  std::size_t add(std::string name, std::size_t rows, std::size_t cols) {
    names.push_back(std::move(name));
    tensors.emplace_back(rows, cols);
    return tensors.size() - 1;
  }

  std::size_t count() const { return tensors.size(); }
  Matrix<T>& operator[](std::size_t i) { return tensors[i]; }
  const Matrix<T>& operator[](std::size_t i) const { return tensors[i]; }

  std::size_t index_of(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? names.size() : static_cast<std::size_t>(it - names.begin());
  }

  // Same names and shapes, zero-filled.
  TensorSet zeros_like() const {
    TensorSet out;
    out.names = names;
    out.tensors.reserve(tensors.size());
    for (const auto& t : tensors) out.tensors.emplace_back(t.rows, t.cols);
    return out;
  }

  void zero() {
    for (auto& t : tensors) t.fill(T(0));
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }

  template <class U>
  TensorSet<U> cast() const {
    TensorSet<U> out;
    out.names = names;
    for (const auto& t : tensors) out.tensors.push_back(t.template cast<U>());
    return out;
  }

  bool operator==(const TensorSet&) const = default;
};

}  // namespace summae

#endif  // SUMMAE_TENSOR_HPP_

/*
 * Copyright 2026 The MHP-Align Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mhp/error.hpp"

namespace mhp {

// Row-major dense matrix. Float storage is the default; the double
// instantiation backs gradient checks against shadow parameters.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  T operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }

  void fill(T v) { std::fill(values_.begin(), values_.end(), v); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    for (std::size_t i = 0; i < values_.size(); ++i) out.values()[i] = static_cast<U>(values_[i]);
    return out;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> values_;
};

using DenseMatrix = Matrix<float>;

// Reductions accumulate in double regardless of storage type.
template <typename A, typename B>
double dot(std::span<const A> a, std::span<const B> b) {
  // Four fixed lanes: keeps the summation order deterministic while letting
  // the adds overlap.
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc[0] += double(a[i]) * double(b[i]);
    acc[1] += double(a[i + 1]) * double(b[i + 1]);
    acc[2] += double(a[i + 2]) * double(b[i + 2]);
    acc[3] += double(a[i + 3]) * double(b[i + 3]);
  }
  for (; i < n; ++i) acc[0] += double(a[i]) * double(b[i]);
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

template <typename A>
double squared_norm(std::span<const A> a) {
  double acc = 0.0;
  for (A v : a) acc += double(v) * double(v);
  return acc;
}

template <typename A>
double l2_norm(std::span<const A> a) {
  return std::sqrt(squared_norm(a));
}

template <typename A>
double sum(std::span<const A> a) {
  double acc = 0.0;
  for (A v : a) acc += double(v);
  return acc;
}

// y = M x for a square or rectangular M (rows = output dim).
template <typename T, typename X>
std::vector<double> matvec(const Matrix<T>& m, std::span<const X> x) {
  std::vector<double> y(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) y[r] = dot(m.row(r), x);
  return y;
}

// Applies M to every row of `rows_in`, returning the mapped rows.
template <typename T>
Matrix<T> map_rows(const Matrix<T>& m, const Matrix<T>& rows_in) {
  Matrix<T> out(rows_in.rows(), m.rows());
  for (std::size_t i = 0; i < rows_in.rows(); ++i) {
    auto src = rows_in.row(i);
    for (std::size_t r = 0; r < m.rows(); ++r) out(i, r) = static_cast<T>(dot(m.row(r), src));
  }
  return out;
}

template <typename T>
bool all_finite(std::span<const T> values) {
  for (T v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename T>
bool all_finite(const Matrix<T>& m) {
  return all_finite(m.values());
}

inline void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace mhp

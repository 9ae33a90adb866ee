// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace road {

/// Dense real vector of fixed length.
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t len, double fill = 0.0) : data_(len, fill) {}
  explicit DenseVector(std::vector<double> data);
  DenseVector(std::initializer_list<double> values) : DenseVector(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  friend bool operator==(const DenseVector&, const DenseVector&) = default;

 private:
  std::vector<double> data_;
};

/// Row-major dense matrix. Entry (i, j) lives at data[i * cols + j].
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> span() const noexcept { return data_; }
  std::span<double> span() noexcept { return data_; }

  DenseMatrix transposed() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Counter-based generator: the n-th draw of a stream is a pure function of
/// (seed, n), so streams reproduce regardless of scheduling. Each draw is a
/// SplitMix64 finalization of seed + n * golden-ratio increment.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Independent child stream; children of equal (seed, stream) are equal.
  SeededRng fork(std::uint64_t stream) const;

  /// Stateless access to draw `index` of this stream.
  std::uint64_t at(std::uint64_t index) const noexcept;

  std::uint64_t next_u64() noexcept { return at(counter_++); }
  /// Uniform in [0, 1) with 53 random bits.
  double next_unit() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * next_unit(); }
  /// Standard normal via Box-Muller; consumes two draws.
  double normal() noexcept;
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) noexcept;

  DenseVector uniform_vector(std::size_t len, double lo, double hi);
  DenseMatrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi);

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// h = W^T x, i.e. h_j = sum_i W(i, j) * x_i. Requires W.rows() == x.size().
DenseVector matvec(const DenseMatrix& w, const DenseVector& x);

/// C = A * B.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

DenseVector operator+(const DenseVector& a, const DenseVector& b);
DenseVector operator-(const DenseVector& a, const DenseVector& b);
DenseVector operator*(double s, const DenseVector& a);

/// Throws NumericError naming the first non-finite entry.
void ensure_finite(std::span<const double> values, const char* what);

using ScalarFunction = std::function<double(const DenseVector&)>;

/// Central differences: result_i = (f(p + step e_i) - f(p - step e_i)) / (2 step).
DenseVector finite_diff_grad(const ScalarFunction& f, const DenseVector& p, double step);

}  // namespace road

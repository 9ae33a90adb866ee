// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#include "road/numeric.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "road/error.hpp"

namespace road {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

DenseVector::DenseVector(std::vector<double> data) : data_(std::move(data)) {
  ensure_finite(data_, "DenseVector");
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("DenseMatrix: data length " + std::to_string(data_.size()) +
                         " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  ensure_finite(data_, "DenseMatrix");
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("DenseMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  ensure_finite(data_, "DenseMatrix");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

SeededRng SeededRng::fork(std::uint64_t stream) const {
  return SeededRng(splitmix64(seed_ ^ splitmix64(stream + kGolden)));
}

std::uint64_t SeededRng::at(std::uint64_t index) const noexcept {
  return splitmix64(seed_ + (index + 1) * kGolden);
}

double SeededRng::next_unit() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::normal() noexcept {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - next_unit();
  const double u2 = next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t SeededRng::below(std::size_t n) noexcept {
  return static_cast<std::size_t>(next_unit() * static_cast<double>(n));
}

DenseVector SeededRng::uniform_vector(std::size_t len, double lo, double hi) {
  std::vector<double> v(len);
  for (auto& x : v) x = uniform(lo, hi);
  return DenseVector(std::move(v));
}

DenseMatrix SeededRng::uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = uniform(lo, hi);
  return DenseMatrix(rows, cols, std::move(v));
}

DenseVector matvec(const DenseMatrix& w, const DenseVector& x) {
  if (w.rows() != x.size()) {
    throw DimensionError("matvec: W has " + std::to_string(w.rows()) + " rows but x has length " +
                         std::to_string(x.size()));
  }
  std::vector<double> h(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double xi = x[i];
    const auto row = w.row(i);
    for (std::size_t j = 0; j < h.size(); ++j) h[j] += row[j] * xi;
  }
  return DenseVector(std::move(h));
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
  std::vector<double> c(a.rows() * b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) c[i * b.cols() + j] += aik * brow[j];
    }
  }
  return DenseMatrix(a.rows(), b.cols(), std::move(c));
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("max_abs_diff: length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

DenseVector operator+(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) throw DimensionError("vector add: length mismatch");
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] + b[i];
  return DenseVector(std::move(r));
}

DenseVector operator-(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) throw DimensionError("vector sub: length mismatch");
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] - b[i];
  return DenseVector(std::move(r));
}

DenseVector operator*(double s, const DenseVector& a) {
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = s * a[i];
  return DenseVector(std::move(r));
}

void ensure_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw NumericError(std::string(what) + ": non-finite entry", i);
  }
}

DenseVector finite_diff_grad(const ScalarFunction& f, const DenseVector& p, double step) {
  if (!(step > 0.0)) throw PreconditionError("finite_diff_grad: step must be positive");
  std::vector<double> g(p.size());
  std::vector<double> probe = p.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    probe[i] = p[i] + step;
    const double fp = f(DenseVector(probe));
    probe[i] = p[i] - step;
    const double fm = f(DenseVector(probe));
    probe[i] = p[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_grad: non-finite function value at probe", i);
    }
    g[i] = (fp - fm) / (2.0 * step);
  }
  return DenseVector(std::move(g));
}

}  // namespace road

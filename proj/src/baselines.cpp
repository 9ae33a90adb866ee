// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#include "road/baselines.hpp"

#include <cmath>
#include <string>

#include "road/error.hpp"

namespace road {

LoraAdapter LoraAdapter::init(std::size_t d1, std::size_t d2, std::size_t r, SeededRng& rng,
                              double scaling) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d1));
  return {DenseMatrix(d1, r), rng.uniform_matrix(r, d2, -bound, bound), scaling};
}

void check_lora_shapes(const LoraAdapter& a, const DenseMatrix& w0) {
  if (a.b.cols() != a.a.rows()) {
    throw DimensionError("LoRA: B has rank " + std::to_string(a.b.cols()) + " but A has " +
                         std::to_string(a.a.rows()) + " rows");
  }
  if (w0.rows() != a.d1() || w0.cols() != a.d2()) {
    throw DimensionError("LoRA: W0 is " + std::to_string(w0.rows()) + "x" +
                         std::to_string(w0.cols()) + ", adapter expects " + std::to_string(a.d1()) +
                         "x" + std::to_string(a.d2()));
  }
}

DenseVector lora_delta(const LoraAdapter& a, const DenseVector& x) {
  if (a.b.cols() != a.a.rows()) throw DimensionError("LoRA: B/A rank mismatch");
  const DenseVector t = matvec(a.b, x);
  return a.scaling * matvec(a.a, t);
}

DenseVector lora_apply(const LoraAdapter& a, const DenseMatrix& w0, const DenseVector& x) {
  check_lora_shapes(a, w0);
  return matvec(w0, x) + lora_delta(a, x);
}

DenseMatrix lora_merge(const LoraAdapter& a, const DenseMatrix& w0) {
  check_lora_shapes(a, w0);
  DenseMatrix w = w0;
  const DenseMatrix ba = matmul(a.b, a.a);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) += a.scaling * ba(i, j);
  return w;
}

LoraGrad lora_grad(const LoraAdapter& a, const DenseVector& x, const DenseVector& upstream) {
  if (x.size() != a.d1() || upstream.size() != a.d2() || a.b.cols() != a.a.rows()) {
    throw DimensionError("lora_grad: shape mismatch");
  }
  const std::size_t r = a.rank();
  const DenseVector t = matvec(a.b, x);  // B^T x
  std::vector<double> au(r, 0.0);         // A u
  for (std::size_t k = 0; k < r; ++k) au[k] = dot(a.a.row(k), upstream.span());

  LoraGrad g{DenseMatrix(a.d1(), r), DenseMatrix(r, a.d2()), DenseVector(a.d1())};
  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t j = 0; j < a.d2(); ++j) g.d_a(k, j) = a.scaling * t[k] * upstream[j];
  for (std::size_t i = 0; i < a.d1(); ++i) {
    double dx = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
      g.d_b(i, k) = a.scaling * x[i] * au[k];
      dx += a.b(i, k) * au[k];
    }
    g.d_x[i] = a.scaling * dx;
  }
  return g;
}

CayleyBlockAdapter CayleyBlockAdapter::identity(std::size_t d2) {
  if (d2 == 0 || d2 % 2 != 0) throw DimensionError("Cayley adapter: d2 must be positive and even");
  return {std::vector<double>(d2 / 2, 0.0)};
}

Mat2 cayley_block(double qi) {
  const Mat2 plus{1.0, qi, -qi, 1.0};   // I + Q
  const Mat2 minus{1.0, -qi, qi, 1.0};  // I - Q
  const double det = minus.det();
  const Mat2 inv{minus.m11 / det, -minus.m01 / det, -minus.m10 / det, minus.m00 / det};
  return plus * inv;
}

Mat2 cayley_block_derivative(double qi) {
  // cayley_block(q) = [[1 - q^2, 2q], [-2q, 1 - q^2]] / (1 + q^2)
  const double den = (1.0 + qi * qi) * (1.0 + qi * qi);
  const double dc = -4.0 * qi / den;
  const double ds = 2.0 * (1.0 - qi * qi) / den;
  return {dc, ds, -ds, dc};
}

DenseVector cayley_apply(const CayleyBlockAdapter& a, const DenseVector& h) {
  if (h.size() != a.d2()) throw DimensionError("cayley_apply: length mismatch");
  std::vector<double> z(h.size());
  for (std::size_t i = 0; i < a.q.size(); ++i) {
    const Mat2 r = cayley_block(a.q[i]);
    z[2 * i] = r.m00 * h[2 * i] + r.m01 * h[2 * i + 1];
    z[2 * i + 1] = r.m10 * h[2 * i] + r.m11 * h[2 * i + 1];
  }
  return DenseVector(std::move(z));
}

CayleyGrad cayley_grad(const CayleyBlockAdapter& a, const DenseVector& h,
                       const DenseVector& upstream) {
  if (h.size() != a.d2() || upstream.size() != a.d2()) {
    throw DimensionError("cayley_grad: length mismatch");
  }
  CayleyGrad g{std::vector<double>(a.q.size()), DenseVector(a.d2())};
  for (std::size_t i = 0; i < a.q.size(); ++i) {
    const double h0 = h[2 * i], h1 = h[2 * i + 1];
    const double u0 = upstream[2 * i], u1 = upstream[2 * i + 1];
    const Mat2 r = cayley_block(a.q[i]);
    const Mat2 dr = cayley_block_derivative(a.q[i]);
    g.d_q[i] = u0 * (dr.m00 * h0 + dr.m01 * h1) + u1 * (dr.m10 * h0 + dr.m11 * h1);
    g.d_h[2 * i] = r.m00 * u0 + r.m10 * u1;
    g.d_h[2 * i + 1] = r.m01 * u0 + r.m11 * u1;
  }
  return g;
}

DenseVector diag_scale_apply(const DiagScaleAdapter& a, const DenseVector& h) {
  if (h.size() != a.d2()) throw DimensionError("diag_scale_apply: length mismatch");
  std::vector<double> z(h.size());
  for (std::size_t j = 0; j < z.size(); ++j) z[j] = a.l[j] * h[j];
  return DenseVector(std::move(z));
}

DiagGrad diag_grad(const DiagScaleAdapter& a, const DenseVector& h, const DenseVector& upstream) {
  if (h.size() != a.d2() || upstream.size() != a.d2()) {
    throw DimensionError("diag_grad: length mismatch");
  }
  DiagGrad g{std::vector<double>(a.d2()), DenseVector(a.d2())};
  for (std::size_t j = 0; j < a.d2(); ++j) {
    g.d_l[j] = upstream[j] * h[j];
    g.d_h[j] = a.l[j] * upstream[j];
  }
  return g;
}

}  // namespace road

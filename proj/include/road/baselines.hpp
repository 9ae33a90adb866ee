// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "road/numeric.hpp"
#include "road/road_adapter.hpp"

namespace road {

/// Low-rank update W = W0 + scaling * B A with B in R^{d1 x r}, A in R^{r x d2}.
struct LoraAdapter {
  DenseMatrix b;  // d1 x r
  DenseMatrix a;  // r x d2
  double scaling = 1.0;

  std::size_t rank() const noexcept { return b.cols(); }
  std::size_t d1() const noexcept { return b.rows(); }
  std::size_t d2() const noexcept { return a.cols(); }

  /// B = 0 and A uniform in +-1/sqrt(d1), so the initial update is zero.
  static LoraAdapter init(std::size_t d1, std::size_t d2, std::size_t r, SeededRng& rng,
                          double scaling = 1.0);
};

/// Throws DimensionError unless B, A and W0 conform.
void check_lora_shapes(const LoraAdapter& a, const DenseMatrix& w0);

/// scaling * A^T (B^T x): the adapter's contribution for input x.
DenseVector lora_delta(const LoraAdapter& a, const DenseVector& x);

/// z = W0^T x + scaling * A^T (B^T x).
DenseVector lora_apply(const LoraAdapter& a, const DenseMatrix& w0, const DenseVector& x);

/// W0 + scaling * B A.
DenseMatrix lora_merge(const LoraAdapter& a, const DenseMatrix& w0);

struct LoraGrad {
  DenseMatrix d_b;
  DenseMatrix d_a;
  DenseVector d_x;  // adapter path only: scaling * B (A u)
};

/// Gradients of <u, lora_delta(a, x)>.
LoraGrad lora_grad(const LoraAdapter& a, const DenseVector& x, const DenseVector& upstream);

/// Output-side block-diagonal orthogonal adapter with 2x2 blocks built by the
/// Cayley map of Q_i = [[0, q_i], [-q_i, 0]].
struct CayleyBlockAdapter {
  std::vector<double> q;  // one skew parameter per block

  std::size_t d2() const noexcept { return 2 * q.size(); }
  static CayleyBlockAdapter identity(std::size_t d2);
};

/// (I + Q)(I - Q)^{-1}. det(I - Q) = 1 + q^2, so the inverse always exists.
Mat2 cayley_block(double qi);
/// d cayley_block / d qi.
Mat2 cayley_block_derivative(double qi);

DenseVector cayley_apply(const CayleyBlockAdapter& a, const DenseVector& h);

struct CayleyGrad {
  std::vector<double> d_q;
  DenseVector d_h;
};

CayleyGrad cayley_grad(const CayleyBlockAdapter& a, const DenseVector& h,
                       const DenseVector& upstream);

/// Per-output multiplicative gains, (IA)^3 style.
struct DiagScaleAdapter {
  std::vector<double> l;

  std::size_t d2() const noexcept { return l.size(); }
  static DiagScaleAdapter identity(std::size_t d2) { return {std::vector<double>(d2, 1.0)}; }
};

DenseVector diag_scale_apply(const DiagScaleAdapter& a, const DenseVector& h);

struct DiagGrad {
  std::vector<double> d_l;
  DenseVector d_h;
};

DiagGrad diag_grad(const DiagScaleAdapter& a, const DenseVector& h, const DenseVector& upstream);

}  // namespace road

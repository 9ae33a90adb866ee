// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#include "road/road_adapter.hpp"

#include <cmath>
#include <string>

#include "road/error.hpp"

namespace road {

namespace {

void require_even(std::size_t d2, const char* who) {
  if (d2 == 0 || d2 % 2 != 0) {
    throw DimensionError(std::string(who) + ": d2 must be positive and even, got " +
                         std::to_string(d2));
  }
}

void require_len(std::size_t got, std::size_t want, const char* who) {
  if (got != want) {
    throw DimensionError(std::string(who) + ": expected length " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

}  // namespace

std::string_view to_string(RoadVariant v) {
  switch (v) {
    case RoadVariant::Road1: return "road1";
    case RoadVariant::Road2: return "road2";
    case RoadVariant::Road4: return "road4";
  }
  return "unknown";
}

RoadVariant variant_from_int(int tag) {
  switch (tag) {
    case 1: return RoadVariant::Road1;
    case 2: return RoadVariant::Road2;
    case 4: return RoadVariant::Road4;
    default: throw PreconditionError("unknown RoAd variant " + std::to_string(tag));
  }
}

std::size_t angle_count(RoadVariant v, std::size_t d2) {
  require_even(d2, "angle_count");
  return (d2 / 2) * static_cast<std::size_t>(v);
}

std::size_t param_count(RoadVariant v, std::size_t d2) {
  require_even(d2, "param_count");
  return 2 * angle_count(v, d2);
}

RoadAdapter RoadAdapter::identity(RoadVariant v, std::size_t d2) {
  const std::size_t n = angle_count(v, d2);
  return RoadAdapter(v, d2, std::vector<double>(n, 0.0), std::vector<double>(n, 1.0));
}

RoadAdapter::RoadAdapter(RoadVariant v, std::size_t d2, std::vector<double> theta,
                         std::vector<double> alpha)
    : variant_(v), d2_(d2), theta_(std::move(theta)), alpha_(std::move(alpha)) {
  const std::size_t n = angle_count(v, d2);
  require_len(theta_.size(), n, "RoadAdapter theta");
  require_len(alpha_.size(), n, "RoadAdapter alpha");
  ensure_finite(theta_, "RoadAdapter theta");
  ensure_finite(alpha_, "RoadAdapter alpha");
}

std::size_t RoadAdapter::params_per_block() const noexcept {
  return static_cast<std::size_t>(variant_);
}

std::size_t RoadAdapter::param_index(std::size_t blk, BlockPos pos) const noexcept {
  switch (variant_) {
    case RoadVariant::Road1: return blk;
    case RoadVariant::Road2: return 2 * blk + (pos >= kPos10 ? 1 : 0);
    case RoadVariant::Road4: return 4 * blk + pos;
  }
  return 0;
}

Mat2 block(const RoadAdapter& a, std::size_t i) {
  const auto th = a.theta();
  const auto al = a.alpha();
  const std::size_t p00 = a.param_index(i, kPos00);
  const std::size_t p01 = a.param_index(i, kPos01);
  const std::size_t p10 = a.param_index(i, kPos10);
  const std::size_t p11 = a.param_index(i, kPos11);
  return {al[p00] * std::cos(th[p00]), -al[p01] * std::sin(th[p01]),
          al[p10] * std::sin(th[p10]), al[p11] * std::cos(th[p11])};
}

std::vector<Mat2> build_blocks(const RoadAdapter& a) {
  std::vector<Mat2> blocks;
  blocks.reserve(a.block_count());
  for (std::size_t i = 0; i < a.block_count(); ++i) blocks.push_back(block(a, i));
  return blocks;
}

DenseMatrix dense_rotation(const RoadAdapter& a) {
  const std::size_t n = a.d2();
  DenseMatrix r(n, n);
  for (std::size_t i = 0; i < a.block_count(); ++i) {
    const Mat2 b = block(a, i);
    r(2 * i, 2 * i) = b.m00;
    r(2 * i, 2 * i + 1) = b.m01;
    r(2 * i + 1, 2 * i) = b.m10;
    r(2 * i + 1, 2 * i + 1) = b.m11;
  }
  return r;
}

FactoredRotation factorize(const RoadAdapter& a) {
  FactoredRotation f{std::vector<double>(a.d2()), std::vector<double>(a.d2())};
  for (std::size_t i = 0; i < a.block_count(); ++i) {
    const Mat2 b = block(a, i);
    f.v1[2 * i] = b.m00;
    f.v1[2 * i + 1] = b.m11;
    f.v2[2 * i] = b.m01;
    f.v2[2 * i + 1] = b.m10;
  }
  return f;
}

DenseVector apply_factored(const FactoredRotation& f, const DenseVector& h) {
  require_len(h.size(), f.d2(), "apply_factored");
  require_len(f.v2.size(), f.d2(), "apply_factored v2");
  std::vector<double> z(h.size());
  rotate_pairs<double>(f.v1, f.v2, h.span(), z);
  return DenseVector(std::move(z));
}

DenseVector apply_dense_oracle(const RoadAdapter& a, const DenseVector& h) {
  require_len(h.size(), a.d2(), "apply_dense_oracle");
  const std::size_t n = a.d2();
  // R lives in a zeroed per-thread buffer; only the block entries are written
  // and cleared again, so large d2 does not pay for a fresh n*n allocation.
  thread_local std::vector<double> r;
  if (r.size() != n * n) r.assign(n * n, 0.0);
  for (std::size_t i = 0; i < a.block_count(); ++i) {
    const Mat2 b = block(a, i);
    r[2 * i * n + 2 * i] = b.m00;
    r[2 * i * n + 2 * i + 1] = b.m01;
    r[(2 * i + 1) * n + 2 * i] = b.m10;
    r[(2 * i + 1) * n + 2 * i + 1] = b.m11;
  }
  std::vector<double> z(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double* row = r.data() + j * n;
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += row[k] * h[k];
    z[j] = s;
  }
  for (std::size_t i = 0; i < n; ++i) {
    r[i * n + (i & ~std::size_t{1})] = 0.0;
    r[i * n + (i | 1)] = 0.0;
  }
  return DenseVector(std::move(z));
}

DenseMatrix merge_into(const RoadAdapter& a, const DenseMatrix& w0) {
  if (w0.cols() != a.d2()) {
    throw DimensionError("merge_into: W0 has " + std::to_string(w0.cols()) +
                         " columns but adapter d2 is " + std::to_string(a.d2()));
  }
  const FactoredRotation f = factorize(a);
  DenseMatrix w(w0.rows(), w0.cols());
  // Row r of W0 R^T is R applied to row r of W0.
  for (std::size_t r = 0; r < w0.rows(); ++r) rotate_pairs<double>(f.v1, f.v2, w0.row(r), w.row(r));
  ensure_finite(w.span(), "merge_into");
  return w;
}

void accumulate_grad(const RoadAdapter& a, std::span<const double> h,
                     std::span<const double> upstream, std::span<double> d_theta,
                     std::span<double> d_alpha, std::span<double> d_h) {
  require_len(h.size(), a.d2(), "grad h");
  require_len(upstream.size(), a.d2(), "grad upstream");
  require_len(d_h.size(), a.d2(), "grad d_h");
  require_len(d_theta.size(), a.theta().size(), "grad d_theta");
  require_len(d_alpha.size(), a.alpha().size(), "grad d_alpha");
  const auto th = a.theta();
  const auto al = a.alpha();
  for (std::size_t i = 0; i < a.block_count(); ++i) {
    const double h0 = h[2 * i];
    const double h1 = h[2 * i + 1];
    const double u0 = upstream[2 * i];
    const double u1 = upstream[2 * i + 1];
    const std::size_t p00 = a.param_index(i, kPos00);
    const std::size_t p01 = a.param_index(i, kPos01);
    const std::size_t p10 = a.param_index(i, kPos10);
    const std::size_t p11 = a.param_index(i, kPos11);
    const double c00 = std::cos(th[p00]), s00 = std::sin(th[p00]);
    const double c01 = std::cos(th[p01]), s01 = std::sin(th[p01]);
    const double c10 = std::cos(th[p10]), s10 = std::sin(th[p10]);
    const double c11 = std::cos(th[p11]), s11 = std::sin(th[p11]);

    // z0 = a00 c00 h0 - a01 s01 h1,  z1 = a10 s10 h0 + a11 c11 h1
    d_theta[p00] += -u0 * al[p00] * s00 * h0;
    d_alpha[p00] += u0 * c00 * h0;
    d_theta[p01] += -u0 * al[p01] * c01 * h1;
    d_alpha[p01] += -u0 * s01 * h1;
    d_theta[p10] += u1 * al[p10] * c10 * h0;
    d_alpha[p10] += u1 * s10 * h0;
    d_theta[p11] += -u1 * al[p11] * s11 * h1;
    d_alpha[p11] += u1 * c11 * h1;

    const double r00 = al[p00] * c00, r01 = -al[p01] * s01;
    const double r10 = al[p10] * s10, r11 = al[p11] * c11;
    d_h[2 * i] = r00 * u0 + r10 * u1;
    d_h[2 * i + 1] = r01 * u0 + r11 * u1;
  }
}

void backprop_factored(const RoadAdapter& a, std::span<const double> d_v1,
                       std::span<const double> d_v2, std::span<double> d_theta,
                       std::span<double> d_alpha) {
  require_len(d_v1.size(), a.d2(), "backprop_factored d_v1");
  require_len(d_v2.size(), a.d2(), "backprop_factored d_v2");
  require_len(d_theta.size(), a.theta().size(), "backprop_factored d_theta");
  require_len(d_alpha.size(), a.alpha().size(), "backprop_factored d_alpha");
  const auto th = a.theta();
  const auto al = a.alpha();
  for (std::size_t i = 0; i < a.block_count(); ++i) {
    // v1 = (a00 cos t00, a11 cos t11), v2 = (-a01 sin t01, a10 sin t10)
    const std::size_t p00 = a.param_index(i, kPos00);
    const std::size_t p01 = a.param_index(i, kPos01);
    const std::size_t p10 = a.param_index(i, kPos10);
    const std::size_t p11 = a.param_index(i, kPos11);
    const double g00 = d_v1[2 * i], g01 = d_v2[2 * i];
    const double g10 = d_v2[2 * i + 1], g11 = d_v1[2 * i + 1];
    d_theta[p00] += -al[p00] * std::sin(th[p00]) * g00;
    d_alpha[p00] += std::cos(th[p00]) * g00;
    d_theta[p01] += -al[p01] * std::cos(th[p01]) * g01;
    d_alpha[p01] += -std::sin(th[p01]) * g01;
    d_theta[p10] += al[p10] * std::cos(th[p10]) * g10;
    d_alpha[p10] += std::sin(th[p10]) * g10;
    d_theta[p11] += -al[p11] * std::sin(th[p11]) * g11;
    d_alpha[p11] += std::cos(th[p11]) * g11;
  }
}

RoadGrad grad(const RoadAdapter& a, const DenseVector& h, const DenseVector& upstream) {
  std::vector<double> dt(a.theta().size(), 0.0);
  std::vector<double> da(a.alpha().size(), 0.0);
  std::vector<double> dh(a.d2(), 0.0);
  accumulate_grad(a, h.span(), upstream.span(), dt, da, dh);
  return {std::move(dt), std::move(da), DenseVector(std::move(dh))};
}

}  // namespace road

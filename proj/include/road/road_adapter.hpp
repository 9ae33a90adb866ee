// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "road/numeric.hpp"

namespace road {

/// Parameter sharing inside each 2x2 block. The enumerator value is both the
/// number of distinct (theta, alpha) pairs per block and the trainable-parameter
/// multiple of d2.
enum class RoadVariant : std::uint8_t { Road1 = 1, Road2 = 2, Road4 = 4 };

std::string_view to_string(RoadVariant v);
RoadVariant variant_from_int(int tag);

/// Number of theta entries (equal to alpha entries) for a layer of width d2.
std::size_t angle_count(RoadVariant v, std::size_t d2);

/// Trainable parameters (theta + alpha) for a layer of width d2: d2, 2 d2, 4 d2.
std::size_t param_count(RoadVariant v, std::size_t d2);

/// 2x2 block [[m00, m01], [m10, m11]].
struct Mat2 {
  double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;

  Mat2 transposed() const { return {m00, m10, m01, m11}; }
  double det() const { return m00 * m11 - m01 * m10; }
  friend Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
            a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
  }
  friend bool operator==(const Mat2&, const Mat2&) = default;
};

/// Entry positions of a block, in the order used for tied-gradient accumulation.
enum BlockPos : std::size_t { kPos00 = 0, kPos01 = 1, kPos10 = 2, kPos11 = 3 };

/// Trainable rotation parameters for one adapted layer of output width d2.
///
/// Block i (0-based) acts on output dimensions (2i, 2i+1) as
///   [[a00 cos t00, -a01 sin t01], [a10 sin t10, a11 cos t11]]
/// where the four (t, a) pairs are tied according to the variant:
/// Road1 ties all four, Road2 ties each row, Road4 ties nothing.
class RoadAdapter {
 public:
  /// theta = 0, alpha = 1: the adapter is an exact no-op.
  static RoadAdapter identity(RoadVariant v, std::size_t d2);

  RoadAdapter(RoadVariant v, std::size_t d2, std::vector<double> theta, std::vector<double> alpha);

  RoadVariant variant() const noexcept { return variant_; }
  std::size_t d2() const noexcept { return d2_; }
  std::size_t block_count() const noexcept { return d2_ / 2; }
  /// Distinct (theta, alpha) pairs owned by one block: 1, 2 or 4.
  std::size_t params_per_block() const noexcept;

  std::span<const double> theta() const noexcept { return theta_; }
  std::span<const double> alpha() const noexcept { return alpha_; }
  std::span<double> theta() noexcept { return theta_; }
  std::span<double> alpha() noexcept { return alpha_; }

  /// Index into theta()/alpha() feeding position `pos` of block `block`.
  std::size_t param_index(std::size_t block, BlockPos pos) const noexcept;

  friend bool operator==(const RoadAdapter&, const RoadAdapter&) = default;

 private:
  RoadVariant variant_;
  std::size_t d2_;
  std::vector<double> theta_;
  std::vector<double> alpha_;
};

/// Two-vector form of R: z = v1 * h + v2 * swap(h), where swap exchanges each
/// adjacent pair. v1 holds (R_i[0,0], R_i[1,1]) and v2 holds (R_i[0,1], R_i[1,0])
/// for every block, so the sign of the off-diagonal lives in v2.
struct FactoredRotation {
  std::vector<double> v1;
  std::vector<double> v2;

  std::size_t d2() const noexcept { return v1.size(); }
};

Mat2 block(const RoadAdapter& a, std::size_t i);
std::vector<Mat2> build_blocks(const RoadAdapter& a);

/// The full d2 x d2 block-diagonal matrix; only for oracles and tests.
DenseMatrix dense_rotation(const RoadAdapter& a);

FactoredRotation factorize(const RoadAdapter& a);

/// Element-wise kernel shared by the library and the serving paths.
/// `out` may not alias `h`.
template <typename T>
inline void rotate_pairs(std::span<const T> v1, std::span<const T> v2, std::span<const T> h,
                         std::span<T> out) noexcept {
  const std::size_t n = h.size();
  for (std::size_t j = 0; j < n; j += 2) {
    const T h0 = h[j];
    const T h1 = h[j + 1];
    out[j] = v1[j] * h0 + v2[j] * h1;
    out[j + 1] = v1[j + 1] * h1 + v2[j + 1] * h0;
  }
}

DenseVector apply_factored(const FactoredRotation& f, const DenseVector& h);

/// z = R h with R materialized densely.
DenseVector apply_dense_oracle(const RoadAdapter& a, const DenseVector& h);

/// W = W0 R^T, so that matvec(W, x) == R (W0^T x).
DenseMatrix merge_into(const RoadAdapter& a, const DenseMatrix& w0);

struct RoadGrad {
  std::vector<double> d_theta;
  std::vector<double> d_alpha;
  DenseVector d_h;
};

/// Gradients of <upstream, R h> with respect to theta, alpha and h.
RoadGrad grad(const RoadAdapter& a, const DenseVector& h, const DenseVector& upstream);

/// Adds the theta/alpha gradients of <upstream, R h> into the given buffers and
/// writes R^T upstream into d_h. Tied parameters accumulate in ascending
/// position order (00, 01, 10, 11) block by block.
void accumulate_grad(const RoadAdapter& a, std::span<const double> h,
                     std::span<const double> upstream, std::span<double> d_theta,
                     std::span<double> d_alpha, std::span<double> d_h);

/// Chain rule from gradients with respect to the factored vectors (v1, v2) to
/// theta and alpha; adds into d_theta / d_alpha. Lets batched callers sum over
/// samples in (v1, v2) space and evaluate sin/cos once per step.
void backprop_factored(const RoadAdapter& a, std::span<const double> d_v1,
                       std::span<const double> d_v2, std::span<double> d_theta,
                       std::span<double> d_alpha);

}  // namespace road

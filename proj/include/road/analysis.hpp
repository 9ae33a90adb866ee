// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "road/numeric.hpp"
#include "road/road_adapter.hpp"
#include "road/trainer.hpp"

namespace road {

/// Pretrained (x0) and finetuned (x) representations of the same token.
struct RepPair {
  DenseVector x0;
  DenseVector x;
};

/// |‖x‖ - ‖x0‖| / ‖x0‖. Throws UndefinedMetricError for zero x0.
double delta_m(const RepPair& p);
/// cos(x, x0). Throws UndefinedMetricError if either vector is zero.
double delta_d(const RepPair& p);

/// z_i = ‖W[:, i]‖ ‖x0‖.
DenseVector magnitude_head(const DenseMatrix& w, const DenseVector& x0);
/// z_i = cos(W[:, i], x0).
DenseVector angle_head(const DenseMatrix& w, const DenseVector& x0);

/// b + P^T (P s - P b). P must have orthonormal rows (within 1e-10).
DenseVector dii_apply(const DenseVector& b, const DenseVector& s, const DenseMatrix& p);

/// h + R (h - R^T h). Requires every alpha equal to 1 and every block
/// orthogonal within 1e-12 (always true for Road1; Road2/Road4 need tied
/// angles), else PreconditionError. Throws NumericError if the result drifts
/// from the direct R h by more than 1e-12.
DenseVector road_as_dii(const RoadAdapter& a, const DenseVector& h);

/// Blocks (0-based) owned by one task.
struct SubspaceMask {
  std::set<std::size_t> block_ids;

  static SubspaceMask range(std::size_t first, std::size_t last);  // [first, last)
  static SubspaceMask all(std::size_t d2) { return range(0, d2 / 2); }
  /// The first d2/4 blocks.
  static SubspaceMask upper_half(std::size_t d2) { return range(0, d2 / 4); }
  /// The remaining blocks after upper_half.
  static SubspaceMask lower_half(std::size_t d2) { return range(d2 / 4, d2 / 2); }

  bool contains(std::size_t block) const { return block_ids.count(block) != 0; }
};

/// Takes each block's parameters from the adapter whose mask owns it; blocks
/// owned by nobody are identity. Throws CompositionConflict on overlap.
RoadAdapter compose(std::span<const std::pair<RoadAdapter, SubspaceMask>> parts);

/// Two regression tasks that share W0 and inputs but read disjoint output
/// halves. Task A owns the upper-half blocks, task B the lower half.
struct TwoTaskResult {
  double single_a = 0.0;    // task A loss of the adapter trained on A alone
  double single_b = 0.0;
  double composed_a = 0.0;  // task A loss of the stitched adapter
  double composed_b = 0.0;
  RoadAdapter adapter_a, adapter_b, composed;
};

/// Trains one adapter per task, stitches them with compose and evaluates both
/// tasks on the result. d2 must be a multiple of 4.
TwoTaskResult two_task_composition(std::size_t d2, RoadVariant variant, std::uint64_t seed,
                                   std::size_t samples = 400, std::size_t epochs = 60);

/// Summary of delta_m / delta_d over many token pairs.
struct RepStats {
  std::size_t count = 0;
  double mean_dm = 0.0;
  double mean_dd = 0.0;
  std::array<double, 3> quartiles_dm{};  // 25th, 50th, 75th percentile
  std::array<double, 3> quartiles_dd{};
};

RepStats summarize(std::span<const RepPair> pairs);

/// Linear-interpolation quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace road

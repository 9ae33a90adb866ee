// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

// Hand-rolled case generators and independent oracles shared by the tests.

#pragma once

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "road/numeric.hpp"
#include "road/road_adapter.hpp"

namespace road::test {

// Runs `body(rng, case_index)` for `cases` independent streams of `seed`.
template <typename F>
void for_all(std::size_t cases, std::uint64_t seed, F&& body) {
  const SeededRng root(seed);
  for (std::size_t c = 0; c < cases; ++c) {
    CAPTURE(c);
    SeededRng rng = root.fork(c);
    body(rng, c);
  }
}

inline constexpr RoadVariant kAllVariants[] = {RoadVariant::Road1, RoadVariant::Road2,
                                               RoadVariant::Road4};

inline std::size_t gen_even(SeededRng& rng, std::size_t max_half) {
  return 2 * (1 + rng.below(max_half));
}

inline RoadAdapter gen_road(SeededRng& rng, RoadVariant v, std::size_t d2, bool unit_alpha = false) {
  const std::size_t n = (d2 / 2) * static_cast<std::size_t>(v);
  std::vector<double> theta(n), alpha(n, 1.0);
  for (double& t : theta) t = rng.uniform(-std::numbers::pi, std::numbers::pi);
  if (!unit_alpha)
    for (double& a : alpha) a = rng.uniform(0.5, 1.5);
  return RoadAdapter(v, d2, std::move(theta), std::move(alpha));
}

// Parameter slot feeding entry (row, col) of block i, restated from the sharing
// pattern: Road1 one pair per block, Road2 one per row, Road4 one per entry.
inline std::size_t oracle_slot(RoadVariant v, std::size_t i, std::size_t row, std::size_t col) {
  switch (v) {
    case RoadVariant::Road1: return i;
    case RoadVariant::Road2: return 2 * i + row;
    case RoadVariant::Road4: return 4 * i + 2 * row + col;
  }
  return 0;
}

// Dense R built entry by entry from (theta, alpha).
inline std::vector<std::vector<double>> oracle_rotation(const RoadAdapter& a) {
  const std::size_t d2 = a.d2();
  std::vector<std::vector<double>> r(d2, std::vector<double>(d2, 0.0));
  for (std::size_t i = 0; i < d2 / 2; ++i) {
    for (std::size_t row = 0; row < 2; ++row) {
      for (std::size_t col = 0; col < 2; ++col) {
        const std::size_t k = oracle_slot(a.variant(), i, row, col);
        const double t = a.theta()[k], al = a.alpha()[k];
        double v = 0.0;
        if (row == col) v = al * std::cos(t);
        else if (row == 0) v = -al * std::sin(t);
        else v = al * std::sin(t);
        r[2 * i + row][2 * i + col] = v;
      }
    }
  }
  return r;
}

inline std::vector<double> oracle_apply(const std::vector<std::vector<double>>& r,
                                        std::span<const double> h) {
  std::vector<double> z(r.size(), 0.0);
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < h.size(); ++j) z[i] += r[i][j] * h[j];
  return z;
}

// W0^T x by explicit loops.
inline std::vector<double> oracle_matvec_t(const DenseMatrix& w, std::span<const double> x) {
  std::vector<double> h(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) h[j] += w(i, j) * x[i];
  return h;
}

inline double max_abs(std::span<const double> a, std::span<const double> b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// Central differences, independent of the library's finite_diff_grad.
inline std::vector<double> central_diff(const std::function<double(std::span<const double>)>& f,
                                        std::vector<double> p, double step = 1e-6) {
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + step;
    const double up = f(p);
    p[i] = keep - step;
    const double down = f(p);
    p[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

// max |a - n| / max(|a|_inf, |n|_inf, floor).
inline double rel_error(std::span<const double> a, std::span<const double> n, double floor = 1e-12) {
  return max_abs(a, n) / std::max({inf_norm(a), inf_norm(n), floor});
}

}  // namespace road::test

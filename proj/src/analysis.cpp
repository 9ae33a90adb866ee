// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#include "road/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "road/error.hpp"

namespace road {

namespace {

void check_same_length(const DenseVector& a, const DenseVector& b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  }
}

double column_norm(const DenseMatrix& w, std::size_t j) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.rows(); ++i) s += w(i, j) * w(i, j);
  return std::sqrt(s);
}

DenseVector apply_blocks(const std::vector<Mat2>& blocks, const DenseVector& h, bool transpose) {
  DenseVector z(h.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Mat2 m = transpose ? blocks[i].transposed() : blocks[i];
    const double h0 = h[2 * i], h1 = h[2 * i + 1];
    z[2 * i] = m.m00 * h0 + m.m01 * h1;
    z[2 * i + 1] = m.m10 * h0 + m.m11 * h1;
  }
  return z;
}

}  // namespace

double delta_m(const RepPair& p) {
  check_same_length(p.x0, p.x, "delta_m");
  const double n0 = norm2(p.x0.span());
  if (n0 == 0.0) throw UndefinedMetricError("delta_m: x0 is the zero vector");
  return std::abs(norm2(p.x.span()) - n0) / n0;
}

double delta_d(const RepPair& p) {
  check_same_length(p.x0, p.x, "delta_d");
  const double n0 = norm2(p.x0.span());
  const double n1 = norm2(p.x.span());
  if (n0 == 0.0 || n1 == 0.0) throw UndefinedMetricError("delta_d: zero vector");
  return std::clamp(dot(p.x.span(), p.x0.span()) / (n0 * n1), -1.0, 1.0);
}

DenseVector magnitude_head(const DenseMatrix& w, const DenseVector& x0) {
  if (w.rows() != x0.size()) throw DimensionError("magnitude_head: W rows must equal len(x0)");
  const double nx = norm2(x0.span());
  DenseVector z(w.cols());
  for (std::size_t j = 0; j < w.cols(); ++j) z[j] = column_norm(w, j) * nx;
  return z;
}

DenseVector angle_head(const DenseMatrix& w, const DenseVector& x0) {
  if (w.rows() != x0.size()) throw DimensionError("angle_head: W rows must equal len(x0)");
  const double nx = norm2(x0.span());
  if (nx == 0.0) throw UndefinedMetricError("angle_head: x0 is the zero vector");
  const DenseVector proj = matvec(w, x0);
  DenseVector z(w.cols());
  for (std::size_t j = 0; j < w.cols(); ++j) {
    const double nc = column_norm(w, j);
    if (nc == 0.0) throw UndefinedMetricError("angle_head: column " + std::to_string(j) + " is zero");
    z[j] = std::clamp(proj[j] / (nc * nx), -1.0, 1.0);
  }
  return z;
}

DenseVector dii_apply(const DenseVector& b, const DenseVector& s, const DenseMatrix& p) {
  check_same_length(b, s, "dii_apply");
  if (p.cols() != b.size()) throw DimensionError("dii_apply: P cols must equal len(b)");
  for (std::size_t i = 0; i < p.rows(); ++i) {
    for (std::size_t k = i; k < p.rows(); ++k) {
      const double g = dot(p.row(i), p.row(k));
      if (std::abs(g - (i == k ? 1.0 : 0.0)) > 1e-10) {
        throw PreconditionError("dii_apply: rows of P are not orthonormal (rows " +
                                std::to_string(i) + ", " + std::to_string(k) + ")");
      }
    }
  }
  const DenseMatrix pt = p.transposed();
  // P x == matvec(P^T, x); P^T y == matvec(P, y).
  const DenseVector diff = matvec(pt, s) - matvec(pt, b);
  return b + matvec(p, diff);
}

DenseVector road_as_dii(const RoadAdapter& a, const DenseVector& h) {
  if (h.size() != a.d2()) throw DimensionError("road_as_dii: len(h) must equal d2");
  for (double al : a.alpha()) {
    if (al != 1.0) throw PreconditionError("road_as_dii: requires alpha == 1 everywhere");
  }
  const auto blocks = build_blocks(a);
  // Road2/Road4 with untied angles are not orthogonal even at alpha == 1.
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Mat2 g = blocks[i] * blocks[i].transposed();
    if (std::abs(g.m00 - 1.0) > 1e-12 || std::abs(g.m11 - 1.0) > 1e-12 ||
        std::abs(g.m01) > 1e-12) {
      throw PreconditionError("road_as_dii: block " + std::to_string(i) + " is not orthogonal");
    }
  }
  const DenseVector z = h + apply_blocks(blocks, h - apply_blocks(blocks, h, true), false);
  const DenseVector direct = apply_factored(factorize(a), h);
  const double err = max_abs_diff(z.span(), direct.span());
  if (!(err <= 1e-12)) {
    throw NumericError("road_as_dii: differs from direct R h by " + std::to_string(err), 0);
  }
  return z;
}

SubspaceMask SubspaceMask::range(std::size_t first, std::size_t last) {
  SubspaceMask m;
  for (std::size_t i = first; i < last; ++i) m.block_ids.insert(i);
  return m;
}

RoadAdapter compose(std::span<const std::pair<RoadAdapter, SubspaceMask>> parts) {
  if (parts.empty()) throw PreconditionError("compose: no adapters given");
  const RoadVariant v = parts.front().first.variant();
  const std::size_t d2 = parts.front().first.d2();
  std::vector<std::size_t> owner(d2 / 2, parts.size());
  std::vector<std::size_t> collisions;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& [adapter, mask] = parts[k];
    if (adapter.variant() != v || adapter.d2() != d2) {
      throw DimensionError("compose: all adapters must share variant and d2");
    }
    for (std::size_t blk : mask.block_ids) {
      if (blk >= owner.size()) {
        throw DimensionError("compose: block " + std::to_string(blk) + " out of range");
      }
      if (owner[blk] != parts.size()) {
        collisions.push_back(blk);
      } else {
        owner[blk] = k;
      }
    }
  }
  if (!collisions.empty()) {
    std::sort(collisions.begin(), collisions.end());
    collisions.erase(std::unique(collisions.begin(), collisions.end()), collisions.end());
    std::string list;
    for (std::size_t blk : collisions) list += (list.empty() ? "" : ",") + std::to_string(blk);
    throw CompositionConflict("compose: masks overlap on blocks " + list, collisions);
  }
  RoadAdapter out = RoadAdapter::identity(v, d2);
  const std::size_t per = out.params_per_block();
  for (std::size_t blk = 0; blk < owner.size(); ++blk) {
    if (owner[blk] == parts.size()) continue;
    const RoadAdapter& src = parts[owner[blk]].first;
    for (std::size_t j = blk * per; j < (blk + 1) * per; ++j) {
      out.theta()[j] = src.theta()[j];
      out.alpha()[j] = src.alpha()[j];
    }
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw PreconditionError("quantile: no values");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

RepStats summarize(std::span<const RepPair> pairs) {
  if (pairs.empty()) throw PreconditionError("summarize: no representation pairs");
  std::vector<double> dm, dd;
  for (const RepPair& p : pairs) {
    dm.push_back(delta_m(p));
    dd.push_back(delta_d(p));
  }
  RepStats s;
  s.count = pairs.size();
  for (std::size_t i = 0; i < dm.size(); ++i) {
    s.mean_dm += dm[i];
    s.mean_dd += dd[i];
  }
  s.mean_dm /= static_cast<double>(dm.size());
  s.mean_dd /= static_cast<double>(dd.size());
  for (std::size_t k = 0; k < 3; ++k) {
    s.quartiles_dm[k] = quantile(dm, 0.25 * static_cast<double>(k + 1));
    s.quartiles_dd[k] = quantile(dd, 0.25 * static_cast<double>(k + 1));
  }
  return s;
}

namespace {

std::vector<double> half_weights(std::size_t d2, bool upper) {
  std::vector<double> w(d2, 0.0);
  for (std::size_t j = 0; j < d2; ++j) w[j] = (j < d2 / 2) == upper ? 1.0 : 0.0;
  return w;
}

double task_loss(const DenseMatrix& w0, const RoadAdapter& a, const Dataset& data, bool upper) {
  const ToyModel m{{ToyLayer{w0, a, Nonlinearity::none, {}}}, Head::regression,
                   half_weights(w0.cols(), upper)};
  return loss(m, data);
}

}  // namespace

TwoTaskResult two_task_composition(std::size_t d2, RoadVariant variant, std::uint64_t seed,
                                   std::size_t samples, std::size_t epochs) {
  if (d2 == 0 || d2 % 4 != 0) throw PreconditionError("two_task_composition: d2 must be a multiple of 4");
  if (samples == 0 || epochs == 0) throw PreconditionError("two_task_composition: empty run");
  SeededRng rng = SeededRng(seed).fork(0x636f6d70ULL);
  const double scale = std::sqrt(3.0 / static_cast<double>(d2));
  const DenseMatrix w0 = rng.uniform_matrix(d2, d2, -scale, scale);

  // Targets come from a different hidden adapter per task plus noise, so
  // neither loss reaches zero.
  const auto hidden = [&] {
    const std::size_t n = (d2 / 2) * static_cast<std::size_t>(variant);
    std::vector<double> theta(n), alpha(n);
    for (double& t : theta) t = rng.uniform(-std::numbers::pi / 4, std::numbers::pi / 4);
    for (double& a : alpha) a = rng.uniform(0.8, 1.2);
    return factorize(RoadAdapter(variant, d2, std::move(theta), std::move(alpha)));
  };
  const FactoredRotation star_a = hidden(), star_b = hidden();
  Dataset task_a, task_b;
  for (std::size_t n = 0; n < samples; ++n) {
    std::vector<double> x(d2);
    for (double& v : x) v = rng.normal();
    const DenseVector xv(std::move(x));
    const DenseVector h = matvec(w0, xv);
    DenseVector ya = apply_factored(star_a, h), yb = apply_factored(star_b, h);
    for (std::size_t j = 0; j < d2; ++j) {
      ya[j] += 0.05 * rng.normal();
      yb[j] += 0.05 * rng.normal();
    }
    task_a.inputs.push_back(xv);
    task_a.targets.push_back(std::move(ya));
    task_b.inputs.push_back(xv);
    task_b.targets.push_back(std::move(yb));
  }

  TrainConfig cfg;
  cfg.lr = 1e-2;
  cfg.epochs = epochs;
  cfg.batch_size = 50;
  cfg.seed = seed;
  const auto train_half = [&](const Dataset& data, bool upper) {
    const SubspaceMask mask = upper ? SubspaceMask::upper_half(d2) : SubspaceMask::lower_half(d2);
    ToyModel m{{ToyLayer{w0, RoadAdapter::identity(variant, d2), Nonlinearity::none,
                         std::vector<std::size_t>(mask.block_ids.begin(), mask.block_ids.end())}},
               Head::regression,
               half_weights(d2, upper)};
    train(m, data, cfg);
    return std::get<RoadAdapter>(*m.layers[0].adapter);
  };

  TwoTaskResult r{0, 0, 0, 0, train_half(task_a, true), train_half(task_b, false),
                  RoadAdapter::identity(variant, d2)};
  const std::pair<RoadAdapter, SubspaceMask> parts[] = {{r.adapter_a, SubspaceMask::upper_half(d2)},
                                                       {r.adapter_b, SubspaceMask::lower_half(d2)}};
  r.composed = compose(parts);
  r.single_a = task_loss(w0, r.adapter_a, task_a, true);
  r.single_b = task_loss(w0, r.adapter_b, task_b, false);
  r.composed_a = task_loss(w0, r.composed, task_a, true);
  r.composed_b = task_loss(w0, r.composed, task_b, false);
  return r;
}

}  // namespace road

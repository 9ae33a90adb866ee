// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#include "road/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "road/error.hpp"

namespace road {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t adapter_param_count(const AnyAdapter& a) {
  return std::visit(Overloaded{
                        [](const RoadAdapter& r) { return r.theta().size() + r.alpha().size(); },
                        [](const LoraAdapter& l) { return l.b.span().size() + l.a.span().size(); },
                        [](const DiagScaleAdapter& d) { return d.l.size(); },
                        [](const CayleyBlockAdapter& c) { return c.q.size(); },
                    },
                    a);
}

std::size_t layer_out_dim(const ToyLayer& layer) { return layer.w0.cols(); }

// Per-step view of a layer's adapter with trig evaluated once.
struct Prepared {
  FactoredRotation road;
  std::vector<Mat2> cayley;
  std::vector<Mat2> cayley_d;
};

Prepared prepare(const ToyLayer& layer) {
  Prepared p;
  if (!layer.adapter) return p;
  if (const auto* r = std::get_if<RoadAdapter>(&*layer.adapter)) {
    p.road = factorize(*r);
  } else if (const auto* c = std::get_if<CayleyBlockAdapter>(&*layer.adapter)) {
    for (double q : c->q) {
      p.cayley.push_back(cayley_block(q));
      p.cayley_d.push_back(cayley_block_derivative(q));
    }
  }
  return p;
}

void check_adapter_shape(const ToyLayer& layer, std::size_t index) {
  if (!layer.adapter) return;
  const std::size_t d2 = layer.w0.cols();
  const std::string where = "layer " + std::to_string(index) + ": ";
  std::visit(Overloaded{
                 [&](const RoadAdapter& r) {
                   if (r.d2() != d2) throw DimensionError(where + "RoAd d2 mismatch");
                 },
                 [&](const LoraAdapter& l) { check_lora_shapes(l, layer.w0); },
                 [&](const DiagScaleAdapter& d) {
                   if (d.d2() != d2) throw DimensionError(where + "diag length mismatch");
                 },
                 [&](const CayleyBlockAdapter& c) {
                   if (c.d2() != d2) throw DimensionError(where + "Cayley d2 mismatch");
                 },
             },
             *layer.adapter);
}

void check_model(const ToyModel& m) {
  if (m.layers.empty()) throw PreconditionError("toy model has no layers");
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    if (i > 0 && m.layers[i].w0.rows() != m.layers[i - 1].w0.cols()) {
      throw DimensionError("layer " + std::to_string(i) + " input width mismatch");
    }
    check_adapter_shape(m.layers[i], i);
  }
  if (!m.output_weights.empty() && m.output_weights.size() != layer_out_dim(m.layers.back())) {
    throw DimensionError("output_weights length mismatch");
  }
}

struct LayerCache {
  std::vector<double> x;  // layer input
  std::vector<double> h;  // W0^T x
  std::vector<double> y;  // layer output after activation
};

void apply_adapter(const ToyLayer& layer, const Prepared& p, std::span<const double> x,
                   std::span<const double> h, std::span<double> z) {
  if (!layer.adapter) {
    std::copy(h.begin(), h.end(), z.begin());
    return;
  }
  std::visit(Overloaded{
                 [&](const RoadAdapter&) { rotate_pairs<double>(p.road.v1, p.road.v2, h, z); },
                 [&](const LoraAdapter& l) {
                   const std::size_t r = l.rank();
                   std::vector<double> t(r, 0.0);
                   for (std::size_t i = 0; i < x.size(); ++i)
                     for (std::size_t k = 0; k < r; ++k) t[k] += l.b(i, k) * x[i];
                   std::copy(h.begin(), h.end(), z.begin());
                   for (std::size_t k = 0; k < r; ++k) {
                     const auto arow = l.a.row(k);
                     for (std::size_t j = 0; j < z.size(); ++j) z[j] += l.scaling * t[k] * arow[j];
                   }
                 },
                 [&](const DiagScaleAdapter& d) {
                   for (std::size_t j = 0; j < z.size(); ++j) z[j] = d.l[j] * h[j];
                 },
                 [&](const CayleyBlockAdapter&) {
                   for (std::size_t i = 0; i < p.cayley.size(); ++i) {
                     const Mat2& b = p.cayley[i];
                     z[2 * i] = b.m00 * h[2 * i] + b.m01 * h[2 * i + 1];
                     z[2 * i + 1] = b.m10 * h[2 * i] + b.m11 * h[2 * i + 1];
                   }
                 },
             },
             *layer.adapter);
}

double activate(Nonlinearity act, double z) {
  switch (act) {
    case Nonlinearity::none: return z;
    case Nonlinearity::relu: return z > 0.0 ? z : 0.0;
    case Nonlinearity::tanh: return std::tanh(z);
  }
  return z;
}

double activation_slope(Nonlinearity act, double y) {
  switch (act) {
    case Nonlinearity::none: return 1.0;
    case Nonlinearity::relu: return y > 0.0 ? 1.0 : 0.0;
    case Nonlinearity::tanh: return 1.0 - y * y;
  }
  return 1.0;
}

void forward_cached(const ToyModel& m, const std::vector<Prepared>& prep,
                    std::span<const double> input, std::vector<LayerCache>& cache) {
  std::vector<double> cur(input.begin(), input.end());
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const ToyLayer& layer = m.layers[li];
    LayerCache& c = cache[li];
    c.x = cur;
    c.h.assign(layer.w0.cols(), 0.0);
    for (std::size_t i = 0; i < layer.w0.rows(); ++i) {
      const double xi = c.x[i];
      const auto row = layer.w0.row(i);
      for (std::size_t j = 0; j < c.h.size(); ++j) c.h[j] += row[j] * xi;
    }
    c.y.assign(c.h.size(), 0.0);
    apply_adapter(layer, prep[li], c.x, c.h, c.y);
    for (double& v : c.y) v = activate(layer.act, v);
    cur = c.y;
  }
}

// Loss of one sample and dL/dy written into `dy`.
double head_loss(const ToyModel& m, std::span<const double> y, std::span<const double> target,
                 std::span<double> dy) {
  std::fill(dy.begin(), dy.end(), 0.0);
  if (m.head == Head::logistic) {
    const double logit = y[0];
    const double t = target[0];
    const double l = std::max(logit, 0.0) - t * logit + std::log1p(std::exp(-std::abs(logit)));
    dy[0] = 1.0 / (1.0 + std::exp(-logit)) - t;
    return l;
  }
  double wsum = 0.0;
  double l = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double w = m.output_weights.empty() ? 1.0 : m.output_weights[j];
    wsum += w;
    const double e = y[j] - target[j];
    l += w * e * e;
    dy[j] = 2.0 * w * e;
  }
  for (double& g : dy) g /= wsum;
  return l / wsum;
}

void check_data(const ToyModel& m, const Dataset& data) {
  if (data.inputs.empty()) throw PreconditionError("dataset is empty");
  if (data.inputs.size() != data.targets.size()) {
    throw DimensionError("dataset inputs/targets count mismatch");
  }
  const std::size_t in = m.layers.front().w0.rows();
  const std::size_t out = m.head == Head::logistic ? 1 : layer_out_dim(m.layers.back());
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (data.inputs[n].size() != in) {
      throw DimensionError("sample " + std::to_string(n) + ": input width mismatch");
    }
    if (data.targets[n].size() != out) {
      throw DimensionError("sample " + std::to_string(n) + ": target width mismatch");
    }
  }
}

std::vector<bool> trainable_mask(const ToyModel& m) {
  std::vector<bool> mask;
  for (const ToyLayer& layer : m.layers) {
    if (!layer.adapter) continue;
    const std::size_t n = adapter_param_count(*layer.adapter);
    const auto* road = std::get_if<RoadAdapter>(&*layer.adapter);
    if (!layer.trainable_blocks || !road) {
      mask.insert(mask.end(), n, true);
      continue;
    }
    std::vector<bool> local(n, false);
    const std::size_t half = road->theta().size();
    for (std::size_t blk : *layer.trainable_blocks) {
      if (blk >= road->block_count()) throw PreconditionError("trainable block out of range");
      for (BlockPos pos : {kPos00, kPos01, kPos10, kPos11}) {
        const std::size_t p = road->param_index(blk, pos);
        local[p] = true;
        local[half + p] = true;
      }
    }
    mask.insert(mask.end(), local.begin(), local.end());
  }
  return mask;
}

}  // namespace

std::string_view adapter_kind_name(const AnyAdapter& a) {
  return std::visit(Overloaded{
                        [](const RoadAdapter& r) { return to_string(r.variant()); },
                        [](const LoraAdapter&) { return std::string_view("lora"); },
                        [](const DiagScaleAdapter&) { return std::string_view("diag"); },
                        [](const CayleyBlockAdapter&) { return std::string_view("cayley"); },
                    },
                    a);
}

std::vector<double> flat_params(const ToyModel& m) {
  std::vector<double> p;
  for (const ToyLayer& layer : m.layers) {
    if (!layer.adapter) continue;
    std::visit(Overloaded{
                   [&](const RoadAdapter& r) {
                     p.insert(p.end(), r.theta().begin(), r.theta().end());
                     p.insert(p.end(), r.alpha().begin(), r.alpha().end());
                   },
                   [&](const LoraAdapter& l) {
                     p.insert(p.end(), l.b.span().begin(), l.b.span().end());
                     p.insert(p.end(), l.a.span().begin(), l.a.span().end());
                   },
                   [&](const DiagScaleAdapter& d) { p.insert(p.end(), d.l.begin(), d.l.end()); },
                   [&](const CayleyBlockAdapter& c) { p.insert(p.end(), c.q.begin(), c.q.end()); },
               },
               *layer.adapter);
  }
  return p;
}

void assign_flat_params(ToyModel& m, std::span<const double> params) {
  std::size_t off = 0;
  auto take = [&](std::span<double> dst) {
    if (off + dst.size() > params.size()) throw DimensionError("assign_flat_params: too few values");
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(off), dst.size(), dst.begin());
    off += dst.size();
  };
  for (ToyLayer& layer : m.layers) {
    if (!layer.adapter) continue;
    std::visit(Overloaded{
                   [&](RoadAdapter& r) {
                     take(r.theta());
                     take(r.alpha());
                   },
                   [&](LoraAdapter& l) {
                     take(l.b.span());
                     take(l.a.span());
                   },
                   [&](DiagScaleAdapter& d) { take(d.l); },
                   [&](CayleyBlockAdapter& c) { take(c.q); },
               },
               *layer.adapter);
  }
  if (off != params.size()) throw DimensionError("assign_flat_params: too many values");
}

DenseVector forward(const ToyModel& m, const DenseVector& x) {
  check_model(m);
  if (x.size() != m.layers.front().w0.rows()) throw DimensionError("forward: input width mismatch");
  std::vector<Prepared> prep;
  for (const ToyLayer& layer : m.layers) prep.push_back(prepare(layer));
  std::vector<LayerCache> cache(m.layers.size());
  forward_cached(m, prep, x.span(), cache);
  return DenseVector(cache.back().y);
}

double loss(const ToyModel& m, const Dataset& data) {
  check_model(m);
  check_data(m, data);
  std::vector<Prepared> prep;
  for (const ToyLayer& layer : m.layers) prep.push_back(prepare(layer));
  std::vector<LayerCache> cache(m.layers.size());
  std::vector<double> dy;
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    forward_cached(m, prep, data.inputs[n].span(), cache);
    dy.assign(cache.back().y.size(), 0.0);
    total += head_loss(m, cache.back().y, data.targets[n].span(), dy);
  }
  return total / static_cast<double>(data.size());
}

double loss_and_grad(const ToyModel& m, const Dataset& data, std::span<const std::size_t> rows,
                     std::span<double> grad) {
  check_model(m);
  check_data(m, data);
  if (rows.empty()) throw PreconditionError("loss_and_grad: no rows");

  const std::size_t nl = m.layers.size();
  std::vector<Prepared> prep;
  std::vector<std::size_t> offset(nl, 0);
  std::size_t total_params = 0;
  for (std::size_t li = 0; li < nl; ++li) {
    prep.push_back(prepare(m.layers[li]));
    offset[li] = total_params;
    if (m.layers[li].adapter) total_params += adapter_param_count(*m.layers[li].adapter);
  }
  if (grad.size() != total_params) throw DimensionError("loss_and_grad: gradient buffer size");
  std::fill(grad.begin(), grad.end(), 0.0);

  // RoAd layers accumulate in (v1, v2) space and convert once at the end.
  std::vector<std::vector<double>> dv1(nl), dv2(nl);
  for (std::size_t li = 0; li < nl; ++li) {
    if (m.layers[li].adapter && std::holds_alternative<RoadAdapter>(*m.layers[li].adapter)) {
      dv1[li].assign(m.layers[li].w0.cols(), 0.0);
      dv2[li].assign(m.layers[li].w0.cols(), 0.0);
    }
  }

  std::vector<LayerCache> cache(nl);
  std::vector<double> g, dh, dx;
  double total = 0.0;
  for (std::size_t n : rows) {
    if (n >= data.size()) throw PreconditionError("loss_and_grad: row out of range");
    forward_cached(m, prep, data.inputs[n].span(), cache);
    g.assign(cache.back().y.size(), 0.0);
    total += head_loss(m, cache.back().y, data.targets[n].span(), g);

    for (std::size_t li = nl; li-- > 0;) {
      const ToyLayer& layer = m.layers[li];
      const LayerCache& c = cache[li];
      for (std::size_t j = 0; j < g.size(); ++j) g[j] *= activation_slope(layer.act, c.y[j]);
      dh.assign(g.size(), 0.0);
      dx.assign(layer.w0.rows(), 0.0);
      double* pg = grad.data() + offset[li];
      if (!layer.adapter) {
        dh = g;
      } else {
        std::visit(
            Overloaded{
                [&](const RoadAdapter&) {
                  const auto& f = prep[li].road;
                  for (std::size_t j = 0; j < g.size(); j += 2) {
                    dv1[li][j] += g[j] * c.h[j];
                    dv2[li][j] += g[j] * c.h[j + 1];
                    dv2[li][j + 1] += g[j + 1] * c.h[j];
                    dv1[li][j + 1] += g[j + 1] * c.h[j + 1];
                    dh[j] = f.v1[j] * g[j] + f.v2[j + 1] * g[j + 1];
                    dh[j + 1] = f.v2[j] * g[j] + f.v1[j + 1] * g[j + 1];
                  }
                },
                [&](const LoraAdapter& l) {
                  const std::size_t r = l.rank();
                  const std::size_t d1 = l.d1(), d2 = l.d2();
                  std::vector<double> t(r, 0.0), au(r, 0.0);
                  for (std::size_t i = 0; i < d1; ++i)
                    for (std::size_t k = 0; k < r; ++k) t[k] += l.b(i, k) * c.x[i];
                  for (std::size_t k = 0; k < r; ++k) au[k] = dot(l.a.row(k), g);
                  double* gb = pg;
                  double* ga = pg + d1 * r;
                  for (std::size_t i = 0; i < d1; ++i)
                    for (std::size_t k = 0; k < r; ++k) {
                      gb[i * r + k] += l.scaling * c.x[i] * au[k];
                      dx[i] += l.scaling * l.b(i, k) * au[k];
                    }
                  for (std::size_t k = 0; k < r; ++k)
                    for (std::size_t j = 0; j < d2; ++j) ga[k * d2 + j] += l.scaling * t[k] * g[j];
                  dh = g;
                },
                [&](const DiagScaleAdapter& d) {
                  for (std::size_t j = 0; j < g.size(); ++j) {
                    pg[j] += g[j] * c.h[j];
                    dh[j] = d.l[j] * g[j];
                  }
                },
                [&](const CayleyBlockAdapter&) {
                  for (std::size_t i = 0; i < prep[li].cayley.size(); ++i) {
                    const Mat2& b = prep[li].cayley[i];
                    const Mat2& db = prep[li].cayley_d[i];
                    const double h0 = c.h[2 * i], h1 = c.h[2 * i + 1];
                    const double u0 = g[2 * i], u1 = g[2 * i + 1];
                    pg[i] += u0 * (db.m00 * h0 + db.m01 * h1) + u1 * (db.m10 * h0 + db.m11 * h1);
                    dh[2 * i] = b.m00 * u0 + b.m10 * u1;
                    dh[2 * i + 1] = b.m01 * u0 + b.m11 * u1;
                  }
                },
            },
            *layer.adapter);
      }
      if (li == 0) break;
      for (std::size_t i = 0; i < layer.w0.rows(); ++i) dx[i] += dot(layer.w0.row(i), dh);
      g = dx;
    }
  }

  for (std::size_t li = 0; li < nl; ++li) {
    if (dv1[li].empty()) continue;
    const auto& r = std::get<RoadAdapter>(*m.layers[li].adapter);
    const std::size_t na = r.theta().size();
    backprop_factored(r, dv1[li], dv2[li], grad.subspan(offset[li], na),
                      grad.subspan(offset[li] + na, na));
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& v : grad) v *= inv;
  return total * inv;
}

TrainTrace train(ToyModel& m, const Dataset& data, const TrainConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw PreconditionError("train: lr must be positive");
  if (cfg.epochs < 1) throw PreconditionError("train: epochs must be at least 1");
  if (cfg.batch_size < 1) throw PreconditionError("train: batch_size must be at least 1");
  check_model(m);
  check_data(m, data);

  const std::vector<bool> mask = trainable_mask(m);
  std::vector<double> params = flat_params(m);
  std::vector<double> grad(params.size()), m1(params.size(), 0.0), m2(params.size(), 0.0);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const SeededRng base(cfg.seed);
  std::size_t step = 0;

  TrainTrace trace;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    SeededRng rng = base.fork(epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      loss_and_grad(m, data, rows, grad);
      ++step;
      if (cfg.optimizer == Optimizer::sgd) {
        for (std::size_t k = 0; k < params.size(); ++k)
          if (mask[k]) params[k] -= cfg.lr * grad[k];
      } else {
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
        for (std::size_t k = 0; k < params.size(); ++k) {
          if (!mask[k]) continue;
          m1[k] = cfg.beta1 * m1[k] + (1.0 - cfg.beta1) * grad[k];
          m2[k] = cfg.beta2 * m2[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
          params[k] -= cfg.lr * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + cfg.eps);
        }
      }
      for (std::size_t k = 0; k < params.size(); ++k) {
        if (!std::isfinite(params[k])) throw DivergedError("train: non-finite parameter", epoch);
      }
      assign_flat_params(m, params);
    }

    const double l = loss(m, data);
    if (!std::isfinite(l)) throw DivergedError("train: non-finite loss", epoch);
    trace.epoch_loss.push_back(l);
    if (cfg.stop_below > 0.0 && l < cfg.stop_below) break;
  }
  for (const ToyLayer& layer : m.layers) trace.adapters.push_back(layer.adapter);
  return trace;
}

RecoveryTask make_recovery_task(std::size_t d2, std::uint64_t seed, std::size_t samples) {
  if (d2 == 0 || d2 % 2 != 0 || d2 > 256) {
    throw PreconditionError("rotation recovery: d2 must be even and at most 256");
  }
  SeededRng rng = SeededRng(seed).fork(0x7265636f76ULL);
  const double scale = std::sqrt(3.0 / static_cast<double>(d2));
  RecoveryTask task{rng.uniform_matrix(d2, d2, -scale, scale), {}, {}};
  const double quarter = std::numbers::pi / 4.0;
  for (std::size_t i = 0; i < d2 / 2; ++i) task.theta_star.push_back(rng.uniform(-quarter, quarter));
  const RoadAdapter star(RoadVariant::Road1, d2, task.theta_star,
                         std::vector<double>(d2 / 2, 1.0));
  const FactoredRotation f = factorize(star);
  for (std::size_t n = 0; n < samples; ++n) {
    std::vector<double> x(d2);
    for (double& v : x) v = rng.normal();
    DenseVector xv(std::move(x));
    task.data.targets.push_back(apply_factored(f, matvec(task.w0, xv)));
    task.data.inputs.push_back(std::move(xv));
  }
  return task;
}

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

double block_angle(const Mat2& b) { return std::atan2(b.m10 - b.m01, b.m00 + b.m11); }

TrainConfig recovery_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.lr = 1e-2;
  cfg.epochs = 500;
  cfg.batch_size = 100;
  cfg.seed = seed;
  cfg.optimizer = Optimizer::adam;
  cfg.stop_below = 1e-10;
  return cfg;
}

RecoveryResult rotation_recovery_experiment(const RecoveryTask& task, RoadVariant variant,
                                            const TrainConfig& cfg) {
  const std::size_t d2 = task.w0.cols();
  ToyModel model{{ToyLayer{task.w0, RoadAdapter::identity(variant, d2), Nonlinearity::none, {}}},
                 Head::regression,
                 {}};
  RecoveryResult res;
  res.trace = train(model, task.data, cfg);
  res.final_loss = res.trace.final_loss();
  res.epochs_run = res.trace.epoch_loss.size();
  const auto& learned = std::get<RoadAdapter>(*model.layers.front().adapter);
  for (std::size_t i = 0; i < d2 / 2; ++i) {
    const Mat2 got = block(learned, i);
    const double c = std::cos(task.theta_star[i]), s = std::sin(task.theta_star[i]);
    res.max_block_error = std::max({res.max_block_error, std::abs(got.m00 - c),
                                    std::abs(got.m01 + s), std::abs(got.m10 - s),
                                    std::abs(got.m11 - c)});
    res.angle_error.push_back(std::abs(wrap_angle(block_angle(got) - task.theta_star[i])));
  }
  return res;
}

RecoveryResult rotation_recovery_experiment(std::size_t d2, RoadVariant variant,
                                            std::uint64_t seed) {
  return rotation_recovery_experiment(make_recovery_task(d2, seed), variant, recovery_config(seed));
}

double diag_recovery_baseline(const RecoveryTask& task, const TrainConfig& cfg) {
  const std::size_t d2 = task.w0.cols();
  ToyModel model{{ToyLayer{task.w0, DiagScaleAdapter::identity(d2), Nonlinearity::none, {}}},
                 Head::regression,
                 {}};
  return train(model, task.data, cfg).final_loss();
}

std::string_view to_string(AdapterKind k) {
  switch (k) {
    case AdapterKind::road1: return "road1";
    case AdapterKind::road2: return "road2";
    case AdapterKind::road4: return "road4";
    case AdapterKind::lora: return "lora";
    case AdapterKind::diag: return "diag";
    case AdapterKind::cayley: return "cayley";
  }
  return "unknown";
}

std::optional<AdapterKind> adapter_kind_from_string(std::string_view s) {
  for (AdapterKind k : {AdapterKind::road1, AdapterKind::road2, AdapterKind::road4,
                        AdapterKind::lora, AdapterKind::diag, AdapterKind::cayley}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

AnyAdapter random_adapter(AdapterKind kind, std::size_t d1, std::size_t d2, SeededRng& rng) {
  auto uniform_vec = [&](std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
  };
  const double pi = std::numbers::pi;
  switch (kind) {
    case AdapterKind::road1:
    case AdapterKind::road2:
    case AdapterKind::road4: {
      const RoadVariant v = kind == AdapterKind::road1   ? RoadVariant::Road1
                            : kind == AdapterKind::road2 ? RoadVariant::Road2
                                                         : RoadVariant::Road4;
      const std::size_t n = angle_count(v, d2);
      auto theta = uniform_vec(n, -pi, pi);
      auto alpha = uniform_vec(n, 0.5, 1.5);
      return RoadAdapter(v, d2, std::move(theta), std::move(alpha));
    }
    case AdapterKind::lora: {
      const std::size_t r = 2;
      return LoraAdapter{rng.uniform_matrix(d1, r, -0.5, 0.5), rng.uniform_matrix(r, d2, -0.5, 0.5),
                         1.0};
    }
    case AdapterKind::diag: return DiagScaleAdapter{uniform_vec(d2, 0.5, 1.5)};
    case AdapterKind::cayley: return CayleyBlockAdapter{uniform_vec(d2 / 2, -2.0, 2.0)};
  }
  throw PreconditionError("random_adapter: unknown kind");
}

double normwise_rel_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) throw DimensionError("normwise_rel_error: size mismatch");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return scale == 0.0 ? 0.0 : diff / scale;
}

std::vector<GradCheckEntry> gradient_check_suite(std::span<const AdapterKind> kinds,
                                                 std::span<const std::size_t> sizes,
                                                 std::uint64_t seed, double tolerance) {
  std::vector<GradCheckEntry> report;
  for (std::size_t size : sizes) {
    if (size == 0 || size % 2 != 0) throw PreconditionError("gradient_check_suite: sizes must be even");
  }
  for (AdapterKind kind : kinds) {
    for (std::size_t size : sizes) {
      SeededRng rng = SeededRng(seed).fork(static_cast<std::uint64_t>(kind) * 1000003 + size);
      const double scale = 1.0 / std::sqrt(static_cast<double>(size));
      ToyModel model;
      for (Nonlinearity act : {Nonlinearity::tanh, Nonlinearity::none}) {
        DenseMatrix w0 = rng.uniform_matrix(size, size, -scale, scale);
        model.layers.push_back({std::move(w0), random_adapter(kind, size, size, rng), act, {}});
      }
      Dataset data;
      for (int n = 0; n < 3; ++n) {
        data.inputs.push_back(rng.uniform_vector(size, -1.0, 1.0));
        data.targets.push_back(rng.uniform_vector(size, -1.0, 1.0));
      }
      const std::vector<double> p0 = flat_params(model);
      std::vector<std::size_t> rows(data.size());
      std::iota(rows.begin(), rows.end(), 0);
      std::vector<double> analytic(p0.size());
      loss_and_grad(model, data, rows, analytic);

      ToyModel probe = model;
      const DenseVector numeric = finite_diff_grad(
          [&](const DenseVector& p) {
            assign_flat_params(probe, p.span());
            return loss(probe, data);
          },
          DenseVector(p0), 1e-5);
      const double err = normwise_rel_error(analytic, numeric.span());
      report.push_back({kind, size, err, err <= tolerance});
    }
  }
  return report;
}

}  // namespace road

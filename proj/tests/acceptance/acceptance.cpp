// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Oracles below are restated from the definitions rather than taken from the
// library wherever the library itself is under test.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "road/adapter_file.hpp"
#include "road/analysis.hpp"
#include "road/baselines.hpp"
#include "road/error.hpp"
#include "road/road_adapter.hpp"
#include "road/serving.hpp"
#include "road/trainer.hpp"

using namespace road;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

constexpr RoadVariant kVariants[] = {RoadVariant::Road1, RoadVariant::Road2, RoadVariant::Road4};

RoadAdapter random_road(SeededRng& rng, RoadVariant v, std::size_t d2, bool unit_alpha = false) {
  const std::size_t n = (d2 / 2) * static_cast<std::size_t>(v);
  std::vector<double> theta(n), alpha(n, 1.0);
  for (double& t : theta) t = rng.uniform(-std::numbers::pi, std::numbers::pi);
  if (!unit_alpha)
    for (double& a : alpha) a = rng.uniform(0.5, 1.5);
  return RoadAdapter(v, d2, std::move(theta), std::move(alpha));
}

// Entry (row, col) of block i from the sharing pattern and the entry formula.
double oracle_entry(const RoadAdapter& a, std::size_t i, std::size_t row, std::size_t col) {
  const std::size_t per = static_cast<std::size_t>(a.variant());
  const std::size_t k = per == 1 ? i : per == 2 ? 2 * i + row : 4 * i + 2 * row + col;
  const double t = a.theta()[k], al = a.alpha()[k];
  if (row == col) return al * std::cos(t);
  return row == 0 ? -al * std::sin(t) : al * std::sin(t);
}

std::vector<double> oracle_apply(const RoadAdapter& a, std::span<const double> h) {
  std::vector<double> z(h.size());
  for (std::size_t i = 0; i < h.size() / 2; ++i)
    for (std::size_t row = 0; row < 2; ++row)
      z[2 * i + row] = oracle_entry(a, i, row, 0) * h[2 * i] + oracle_entry(a, i, row, 1) * h[2 * i + 1];
  return z;
}

double max_abs(std::span<const double> a, std::span<const double> b) {
  double m = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

Outcome equivalence() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (RoadVariant v : kVariants) {
    for (std::size_t d2 : {2, 4, 64, 4096}) {
      const SeededRng root(1000 + d2 + static_cast<std::size_t>(v));
      for (std::size_t c = 0; c < 100; ++c) {
        SeededRng rng = root.fork(c);
        const RoadAdapter a = random_road(rng, v, d2);
        const DenseVector h = rng.uniform_vector(d2, -3, 3);
        const DenseVector f = apply_factored(factorize(a), h);
        worst = std::max(worst, max_abs_diff(f.span(), apply_dense_oracle(a, h).span()));
        worst = std::max(worst, max_abs(f.span(), oracle_apply(a, h.span())));
      }
    }
  }
  const double secs = seconds_since(t0);
  o.require(worst <= 1e-12, "max abs error " + fmt("%.3e", worst));
  o.require(secs < 10.0, "took " + fmt("%.1f s", secs));
  if (o.pass) o.detail = "1200 cases, max abs error " + fmt("%.2e", worst) + ", " + fmt("%.2f s", secs);
  return o;
}

Outcome merge() {
  Outcome o;
  const SeededRng root(2);
  double worst = 0.0;
  for (std::size_t c = 0; c < 100; ++c) {
    SeededRng rng = root.fork(c);
    const std::size_t d1 = 1 + rng.below(24), d2 = 2 * (1 + rng.below(12));
    const DenseMatrix w0 = rng.uniform_matrix(d1, d2, -1, 1);
    const RoadAdapter a = random_road(rng, kVariants[c % 3], d2);
    const DenseVector x = rng.uniform_vector(d1, -1, 1);
    std::vector<double> h(d2, 0.0);
    for (std::size_t i = 0; i < d1; ++i)
      for (std::size_t j = 0; j < d2; ++j) h[j] += w0(i, j) * x[i];
    const std::vector<double> want = oracle_apply(a, h);
    const DenseVector got = matvec(merge_into(a, w0), x);
    worst = std::max(worst, max_abs(got.span(), want) / std::max(inf_norm(want), 1e-300));
    const RoadAdapter id = RoadAdapter::identity(kVariants[c % 3], d2);
    o.require(merge_into(id, w0) == w0, "identity merge is not bitwise W0");
  }
  o.require(worst <= 1e-9, "relative error " + fmt("%.3e", worst));
  if (o.pass) o.detail = "100 cases, max relative error " + fmt("%.2e", worst) + ", identity merge bitwise";
  return o;
}

Outcome orthogonality() {
  Outcome o;
  const SeededRng root(3);
  double worst = 0.0;
  for (std::size_t c = 0; c < 100; ++c) {
    SeededRng rng = root.fork(c);
    const std::size_t d2 = 2 * (1 + rng.below(16));
    const RoadAdapter a = random_road(rng, RoadVariant::Road1, d2, true);
    const DenseMatrix r = dense_rotation(a);
    for (std::size_t i = 0; i < d2; ++i) {
      for (std::size_t j = 0; j < d2; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < d2; ++k) s += r(k, i) * r(k, j);
        worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
      }
    }
    for (std::size_t i = 0; i < d2 / 2; ++i) {
      const double det = oracle_entry(a, i, 0, 0) * oracle_entry(a, i, 1, 1) -
                         oracle_entry(a, i, 0, 1) * oracle_entry(a, i, 1, 0);
      worst = std::max(worst, std::abs(det - 1.0));
    }
  }
  double cayley = 0.0;
  for (int k = -1000; k <= 1000; ++k) {
    const Mat2 b = cayley_block(k / 100.0);
    const Mat2 p = b.transposed() * b;
    cayley = std::max({cayley, std::abs(p.m00 - 1), std::abs(p.m01), std::abs(p.m10), std::abs(p.m11 - 1)});
  }
  o.require(worst <= 1e-12, "Road1 orthogonality/det error " + fmt("%.3e", worst));
  o.require(cayley <= 1e-12, "Cayley orthogonality error " + fmt("%.3e", cayley));
  if (o.pass)
    o.detail = "Road1 max error " + fmt("%.2e", worst) + ", Cayley on [-10, 10] max error " + fmt("%.2e", cayley);
  return o;
}

// Two tanh-connected adapted layers, gradients by central differences.
Outcome gradients() {
  Outcome o;
  const auto t0 = Clock::now();
  constexpr AdapterKind kinds[] = {AdapterKind::road1, AdapterKind::road2, AdapterKind::road4,
                                   AdapterKind::lora,  AdapterKind::diag,  AdapterKind::cayley};
  double worst = 0.0;
  for (AdapterKind kind : kinds) {
    const SeededRng root(40 + static_cast<std::uint64_t>(kind));
    for (std::size_t c = 0; c < 100; ++c) {
      SeededRng rng = root.fork(c);
      const std::size_t d = 2 * (1 + rng.below(3));
      ToyModel m;
      m.layers.push_back({rng.uniform_matrix(d, d, -1, 1), random_adapter(kind, d, d, rng), Nonlinearity::tanh, {}});
      m.layers.push_back({rng.uniform_matrix(d, d, -1, 1), random_adapter(kind, d, d, rng), Nonlinearity::none, {}});
      Dataset data;
      for (int n = 0; n < 4; ++n) {
        data.inputs.push_back(rng.uniform_vector(d, -1, 1));
        data.targets.push_back(rng.uniform_vector(d, -1, 1));
      }
      std::vector<std::size_t> rows(data.size());
      std::iota(rows.begin(), rows.end(), 0);
      std::vector<double> p = flat_params(m), analytic(p.size()), numeric(p.size());
      loss_and_grad(m, data, rows, analytic);
      const double step = 1e-5;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + step;
        assign_flat_params(m, p);
        const double up = loss(m, data);
        p[i] = keep - step;
        assign_flat_params(m, p);
        const double down = loss(m, data);
        p[i] = keep;
        numeric[i] = (up - down) / (2 * step);
      }
      const double err = max_abs(analytic, numeric) / std::max({inf_norm(analytic), inf_norm(numeric), 1e-12});
      worst = std::max(worst, err);
      o.require(err <= 1e-5, std::string(to_string(kind)) + " case " + std::to_string(c) + " relative error " +
                                 fmt("%.3e", err));
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < 30.0, "took " + fmt("%.1f s", secs));
  if (o.pass) o.detail = "600 cases, max relative error " + fmt("%.2e", worst) + ", " + fmt("%.2f s", secs);
  return o;
}

Outcome param_counts() {
  Outcome o;
  for (std::size_t d2 : {2, 768, 1024, 4096, 5120}) {
    o.require(param_count(RoadVariant::Road1, d2) == d2, "Road1 count at d2=" + std::to_string(d2));
    o.require(param_count(RoadVariant::Road2, d2) == 2 * d2, "Road2 count at d2=" + std::to_string(d2));
    o.require(param_count(RoadVariant::Road4, d2) == 4 * d2, "Road4 count at d2=" + std::to_string(d2));
    // LoRA trains r (d1 + d2) values; r = 1/2 with d1 == d2 gives d2.
    o.require(2 * param_count(RoadVariant::Road1, d2) == 1 * (d2 + d2), "rank-0.5 LoRA equality");
    SeededRng rng(5);
    const LoraAdapter l = LoraAdapter::init(d2, d2, 1, rng);
    o.require(2 * param_count(RoadVariant::Road1, d2) == l.b.rows() * l.b.cols() + l.a.rows() * l.a.cols(),
              "rank-1 LoRA is twice Road1");
  }
  if (o.pass) o.detail = "d2, 2 d2, 4 d2 exact for 5 widths; Road1 equals rank-0.5 LoRA";
  return o;
}

// Per-dimension least-squares gain, the best any diagonal scaling can do.
double best_diagonal_mse(const RecoveryTask& task) {
  const std::size_t d2 = task.w0.cols(), n = task.data.size();
  std::vector<std::vector<double>> h(n);
  for (std::size_t s = 0; s < n; ++s) {
    h[s].assign(d2, 0.0);
    for (std::size_t i = 0; i < d2; ++i)
      for (std::size_t j = 0; j < d2; ++j) h[s][j] += task.w0(i, j) * task.data.inputs[s][i];
  }
  double total = 0.0;
  for (std::size_t j = 0; j < d2; ++j) {
    double hy = 0.0, hh = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      hy += h[s][j] * task.data.targets[s][j];
      hh += h[s][j] * h[s][j];
    }
    const double g = hy / hh;
    for (std::size_t s = 0; s < n; ++s) {
      const double e = task.data.targets[s][j] - g * h[s][j];
      total += e * e;
    }
  }
  return total / static_cast<double>(n * d2);
}

Outcome recovery() {
  Outcome o;
  const auto t0 = Clock::now();
  const RecoveryTask task = make_recovery_task(32, 0, 2000);
  const TrainConfig cfg = recovery_config(0);
  const RecoveryResult r = rotation_recovery_experiment(task, RoadVariant::Road1, cfg);
  const double secs = seconds_since(t0);
  double angle = 0.0;
  for (double e : r.angle_error) angle = std::max(angle, std::abs(e));
  const double diag = diag_recovery_baseline(task, cfg);
  const double floor = best_diagonal_mse(task);
  o.require(r.final_loss < 1e-3, "Road1 MSE " + fmt("%.3e", r.final_loss));
  o.require(angle <= 1e-2, "angle error " + fmt("%.3e", angle));
  o.require(r.epochs_run <= 500, "epochs " + std::to_string(r.epochs_run));
  o.require(secs < 60.0, "took " + fmt("%.1f s", secs));
  o.require(diag >= 10.0 * r.final_loss, "diag MSE " + fmt("%.3e", diag) + " not 10x worse");
  o.require(std::abs(diag - floor) <= 0.01 * floor,
            "diag MSE " + fmt("%.6f", diag) + " vs least-squares floor " + fmt("%.6f", floor));
  if (o.pass)
    o.detail = "MSE " + fmt("%.2e", r.final_loss) + " in " + std::to_string(r.epochs_run) + " epochs, angle error " +
               fmt("%.2e", angle) + ", diag " + fmt("%.4f", diag) + " (floor " + fmt("%.4f", floor) + "), " +
               fmt("%.1f s", secs);
  return o;
}

Outcome serving_correctness() {
  Outcome o;
  double worst = 0.0;
  for (std::size_t c = 0; c < 50; ++c) {
    SeededRng rng = SeededRng(7).fork(c);
    const std::size_t d1 = 1 + rng.below(12), d2 = 2 * (1 + rng.below(8)), r = 1 + rng.below(4);
    const ServingFixture fx = make_serving_fixture(2 + rng.below(4), d1, d2, r, 700 + c,
                                                   kVariants[c % 3], c % 2 == 0);
    const std::size_t b = 1 + rng.below(16), l = 1 + rng.below(5);
    const auto pick = [&](const std::vector<std::string>& ids) {
      std::vector<std::string> out;
      for (std::size_t i = 0; i < b; ++i) out.push_back(ids[rng.below(ids.size())]);
      return out;
    };
    const auto compare = [&](const Tensor3<double>& got, const HeteroBatch<double>& batch) {
      const Tensor3<double> want = serve_sequential_oracle(fx.registry, batch, fx.w0);
      worst = std::max(worst, max_abs(got.data, want.data));
    };
    const auto lb = make_batch<double>(l, d1, pick(fx.lora_ids), c);
    compare(serve_lora_bmm(fx.registry, lb, fx.w0, ServeMode::prefill), lb);
    compare(serve_lora_bmm(fx.registry, lb, fx.w0, ServeMode::decode), lb);
    const auto rb = make_batch<double>(l, d1, pick(fx.road_ids), c + 1);
    compare(serve_road_elementwise(fx.registry, rb, fx.w0, ServeMode::prefill), rb);
    compare(serve_road_elementwise(fx.registry, rb, fx.w0, ServeMode::decode), rb);
    const auto db = make_batch<double>(l, d1, pick(fx.diag_ids), c + 2);
    compare(serve_diag_elementwise(fx.registry, db, fx.w0, ServeMode::prefill), db);
  }
  o.require(worst <= 1e-12, "max abs error " + fmt("%.3e", worst));
  if (o.pass) o.detail = "50 registries, max abs error " + fmt("%.2e", worst);
  return o;
}

const BenchReport* find(const std::vector<BenchReport>& rs, Kernel k) {
  for (const auto& r : rs)
    if (r.kernel == k) return &r;
  return nullptr;
}

Outcome serving_performance() {
  Outcome o;
  const auto t0 = Clock::now();
  WorkloadSpec spec;
  spec.batch_sizes = {8};
  spec.token_counts = {2048};
  spec.ranks = {8};
  spec.d1 = spec.d2 = 2048;
  spec.mode = ServeMode::decode;

  spec.kernels = {Kernel::lora_bmm, Kernel::road_elementwise};
  spec.scope = BenchScope::adapter;
  const auto adapter_scope = run_bench(spec, 5, 1);
  spec.kernels = {Kernel::lora_bmm, Kernel::lora_merged_homogeneous};
  spec.scope = BenchScope::layer;
  const auto layer_scope = run_bench(spec, 5, 1);
  const double secs = seconds_since(t0);

  const BenchReport* bmm = find(adapter_scope, Kernel::lora_bmm);
  const BenchReport* road = find(adapter_scope, Kernel::road_elementwise);
  const BenchReport* bmm_layer = find(layer_scope, Kernel::lora_bmm);
  const BenchReport* merged = find(layer_scope, Kernel::lora_merged_homogeneous);
  if (!bmm || !road || !bmm_layer || !merged) {
    o.require(false, "missing bench rows");
    return o;
  }
  o.require(road->wall_ns < bmm->wall_ns, "road_elementwise " + std::to_string(road->wall_ns) +
                                              " ns not below lora_bmm " + std::to_string(bmm->wall_ns) + " ns");
  o.require(merged->wall_ns < bmm_layer->wall_ns, "lora_merged_homogeneous " + std::to_string(merged->wall_ns) +
                                                      " ns not below lora_bmm " + std::to_string(bmm_layer->wall_ns) +
                                                      " ns (layer scope)");
  // road / lora = 3 d2 / (2 r (d1 + d2)), cross-multiplied.
  const std::uint64_t r = 8, d = 2048;
  o.require(road->flops * (2 * r * (d + d)) == bmm->flops * (3 * d), "FLOP ratio differs from 3 d2 / (2 r (d1 + d2))");
  o.require(road->flops == 3ull * 8 * 2048 * d, "road FLOPs not 3 d2 per token");
  o.require(secs < 300.0, "took " + fmt("%.1f s", secs));
  if (o.pass) {
    o.detail = "adapter scope road " + fmt("%.1f", road->wall_ns / 1e6) + " ms vs bmm " +
               fmt("%.1f", bmm->wall_ns / 1e6) + " ms; layer scope merged " + fmt("%.1f", merged->wall_ns / 1e6) +
               " ms vs bmm " + fmt("%.1f", bmm_layer->wall_ns / 1e6) + " ms; FLOP ratio " +
               fmt("%.4f", static_cast<double>(road->flops) / static_cast<double>(bmm->flops)) + "; " +
               fmt("%.0f s", secs);
  }
  return o;
}

Outcome composition() {
  Outcome o;
  const SeededRng root(9);
  for (std::size_t c = 0; c < 100; ++c) {
    SeededRng rng = root.fork(c);
    const RoadVariant v = kVariants[c % 3];
    const std::size_t d2 = 4 * (1 + rng.below(8));
    const RoadAdapter a = random_road(rng, v, d2);
    const DenseVector h = rng.uniform_vector(d2, -2, 2);
    const DenseVector base = apply_factored(factorize(a), h);

    // Block locality: perturbing block i moves only outputs 2i and 2i+1.
    RoadAdapter moved = a;
    const std::size_t i = rng.below(d2 / 2), per = a.params_per_block();
    for (std::size_t k = i * per; k < (i + 1) * per; ++k) moved.theta()[k] += 0.5;
    const DenseVector after = apply_factored(factorize(moved), h);
    for (std::size_t j = 0; j < d2; ++j)
      if (j / 2 != i) o.require(after[j] == base[j], "block locality broken");

    // Non-interference: stitched outputs equal each source on its own blocks.
    const RoadAdapter b = random_road(rng, v, d2);
    const std::size_t k = 1 + rng.below(d2 / 2 - 1);
    const std::pair<RoadAdapter, SubspaceMask> parts[] = {{a, SubspaceMask::range(0, k)},
                                                         {b, SubspaceMask::range(k, d2 / 2)}};
    const DenseVector zc = apply_factored(factorize(compose(parts)), h);
    const DenseVector zb = apply_factored(factorize(b), h);
    for (std::size_t j = 0; j < d2; ++j)
      o.require(zc[j] == (j < 2 * k ? base[j] : zb[j]), "stitched output differs from its source");
  }
  double worst = 0.0;
  for (RoadVariant v : kVariants) {
    const TwoTaskResult r = two_task_composition(32, v, 90);
    worst = std::max({worst, std::abs(r.composed_a - r.single_a), std::abs(r.composed_b - r.single_b)});
  }
  o.require(worst <= 1e-6, "composed per-task loss differs by " + fmt("%.3e", worst));
  if (o.pass) o.detail = "locality and non-interference bitwise; two-task loss gap " + fmt("%.2e", worst);
  return o;
}

Outcome dii() {
  Outcome o;
  const SeededRng root(10);
  double worst = 0.0;
  for (std::size_t c = 0; c < 100; ++c) {
    SeededRng rng = root.fork(c);
    const std::size_t d2 = 2 * (1 + rng.below(32));
    const RoadAdapter a = random_road(rng, RoadVariant::Road1, d2, true);
    const DenseVector h = rng.uniform_vector(d2, -3, 3);
    worst = std::max(worst, max_abs(road_as_dii(a, h).span(), oracle_apply(a, h.span())));
  }
  o.require(worst <= 1e-12, "max abs error " + fmt("%.3e", worst));
  if (o.pass) o.detail = "100 cases, max abs error " + fmt("%.2e", worst);
  return o;
}

Outcome serialization() {
  Outcome o;
  const SeededRng root(11);
  for (std::size_t c = 0; c < 1000; ++c) {
    SeededRng rng = root.fork(c);
    const RoadVariant v = kVariants[c % 3];
    const RoadAdapter a = random_road(rng, v, 2 * (1 + rng.below(64)));
    const NamedAdapter layer{"layer" + std::to_string(c), a};
    const auto decoded = decode_adapters(encode_adapters(std::span(&layer, 1)));
    bool same = decoded.size() == 1 && decoded[0].name == layer.name && decoded[0].adapter.variant() == v &&
                decoded[0].adapter.d2() == a.d2();
    for (std::size_t k = 0; same && k < a.theta().size(); ++k) {
      same = decoded[0].adapter.theta()[k] == static_cast<double>(static_cast<float>(a.theta()[k])) &&
             decoded[0].adapter.alpha()[k] == static_cast<double>(static_cast<float>(a.alpha()[k]));
    }
    o.require(same, "round trip " + std::to_string(c) + " changed values");
  }
  std::size_t flips = 0, detected = 0;
  for (RoadVariant v : kVariants) {
    SeededRng rng(12);
    const RoadAdapter a = quantize_f32(random_road(rng, v, 4));
    const NamedAdapter layer{"l", a};
    const auto good = encode_adapters(std::span(&layer, 1));
    for (std::size_t i = 0; i < good.size(); ++i) {
      for (unsigned x = 1; x < 256; ++x) {
        auto bad = good;
        bad[i] ^= static_cast<std::uint8_t>(x);
        ++flips;
        try {
          const auto d = decode_adapters(bad);
          o.require(d.size() == 1 && d[0].name == "l" && d[0].adapter == a,
                    "byte " + std::to_string(i) + " flip decoded to a different adapter");
        } catch (const CorruptFileError&) {
          ++detected;
        }
      }
    }
  }
  if (o.pass)
    o.detail = "1000 round trips; " + std::to_string(detected) + "/" + std::to_string(flips) +
               " byte corruptions detected, none silently different";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"factored equals dense", equivalence},
      {"merge consistency", merge},
      {"orthogonality", orthogonality},
      {"gradients", gradients},
      {"parameter counts", param_counts},
      {"rotation recovery", recovery},
      {"serving correctness", serving_correctness},
      {"serving performance ordering", serving_performance},
      {"composition", composition},
      {"dii identity", dii},
      {"serialization", serialization},
  };
  // Optional arguments pick criteria by number; the default runs all of them.
  std::vector<bool> selected(std::size(criteria), argc < 2);
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > static_cast<int>(std::size(criteria))) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
      return 2;
    }
    selected[n - 1] = true;
  }
  int failed = 0;
  for (std::size_t n = 0; n < std::size(criteria); ++n) {
    if (!selected[n]) continue;
    Outcome o;
    try {
      o = criteria[n].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %zu: %s: %s\n", o.pass ? "PASS" : "FAIL", n + 1, criteria[n].name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#include "road/verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>

#include "road/adapter_file.hpp"
#include "road/analysis.hpp"
#include "road/baselines.hpp"
#include "road/error.hpp"
#include "road/road_adapter.hpp"
#include "road/serving.hpp"
#include "road/trainer.hpp"

namespace road {

namespace {

constexpr RoadVariant kVariants[] = {RoadVariant::Road1, RoadVariant::Road2, RoadVariant::Road4};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

RoadAdapter random_road(RoadVariant v, std::size_t d2, SeededRng& rng, bool unit_alpha = false) {
  const std::size_t n = angle_count(v, d2);
  std::vector<double> theta(n), alpha(n, 1.0);
  for (double& t : theta) t = rng.uniform(-std::numbers::pi, std::numbers::pi);
  if (!unit_alpha)
    for (double& a : alpha) a = rng.uniform(0.5, 1.5);
  return RoadAdapter(v, d2, std::move(theta), std::move(alpha));
}

CheckResult check_factored(SeededRng rng) {
  double worst = 0.0;
  for (RoadVariant v : kVariants)
    for (std::size_t d2 : {2, 4, 64})
      for (int c = 0; c < 20; ++c) {
        const RoadAdapter a = random_road(v, d2, rng);
        const DenseVector h = rng.uniform_vector(d2, -1.0, 1.0);
        const DenseVector f = apply_factored(factorize(a), h);
        const DenseVector d = apply_dense_oracle(a, h);
        worst = std::max(worst, max_abs_diff(f.span(), d.span()));
      }
  return {"factored_equals_dense", worst <= 1e-12, "max abs diff " + sci(worst)};
}

CheckResult check_merge(SeededRng rng) {
  double worst = 0.0;
  bool identity_exact = true;
  for (int c = 0; c < 20; ++c) {
    const RoadVariant v = kVariants[c % 3];
    const std::size_t d1 = 6 + 2 * static_cast<std::size_t>(c % 5), d2 = 8;
    const DenseMatrix w0 = rng.uniform_matrix(d1, d2, -1.0, 1.0);
    const RoadAdapter a = random_road(v, d2, rng);
    const DenseVector x = rng.uniform_vector(d1, -1.0, 1.0);
    const DenseVector merged = matvec(merge_into(a, w0), x);
    const DenseVector direct = apply_factored(factorize(a), matvec(w0, x));
    worst = std::max(worst, max_abs_diff(merged.span(), direct.span()) / norm2(direct.span()));
    identity_exact = identity_exact && merge_into(RoadAdapter::identity(v, d2), w0) == w0;
  }
  return {"merge_consistency", worst <= 1e-9 && identity_exact,
          "max rel diff " + sci(worst) + (identity_exact ? "" : "; identity merge not bitwise W0")};
}

CheckResult check_orthogonality(SeededRng rng) {
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const RoadAdapter a = random_road(RoadVariant::Road1, 16, rng, true);
    for (const Mat2& b : build_blocks(a)) {
      const Mat2 g = b.transposed() * b;
      worst = std::max({worst, std::abs(g.m00 - 1), std::abs(g.m11 - 1), std::abs(g.m01),
                        std::abs(g.m10), std::abs(b.det() - 1)});
    }
  }
  for (int k = 0; k <= 200; ++k) {
    const Mat2 b = cayley_block(-10.0 + 0.1 * k);
    const Mat2 g = b.transposed() * b;
    worst = std::max({worst, std::abs(g.m00 - 1), std::abs(g.m11 - 1), std::abs(g.m01),
                      std::abs(g.m10)});
  }
  return {"orthogonality", worst <= 1e-12, "max deviation " + sci(worst)};
}

CheckResult check_param_counts() {
  bool ok = true;
  for (std::size_t d2 : {2, 768, 1024, 4096, 5120}) {
    ok = ok && param_count(RoadVariant::Road1, d2) == d2 &&
         param_count(RoadVariant::Road2, d2) == 2 * d2 &&
         param_count(RoadVariant::Road4, d2) == 4 * d2;
    // Rank-1/2 LoRA at d1 == d2 trains (d1 + d2) / 2 values.
    ok = ok && 2 * param_count(RoadVariant::Road1, d2) == d2 + d2;
  }
  return {"param_counts", ok, ok ? "d2, 2 d2, 4 d2" : "mismatch"};
}

CheckResult check_gradients(std::uint64_t seed) {
  const AdapterKind kinds[] = {AdapterKind::road1, AdapterKind::road2, AdapterKind::road4,
                               AdapterKind::lora,  AdapterKind::diag,  AdapterKind::cayley};
  const std::size_t sizes[] = {4, 8};
  double worst = 0.0;
  bool ok = true;
  for (const auto& e : gradient_check_suite(kinds, sizes, seed, 1e-5)) {
    worst = std::max(worst, e.max_rel_error);
    ok = ok && e.passed;
  }
  return {"gradients", ok, "max rel error " + sci(worst)};
}

CheckResult check_dii(SeededRng rng) {
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const RoadAdapter a = random_road(RoadVariant::Road1, 16, rng, true);
    const DenseVector h = rng.uniform_vector(16, -1.0, 1.0);
    worst = std::max(worst, max_abs_diff(road_as_dii(a, h).span(),
                                         apply_dense_oracle(a, h).span()));
  }
  // Idempotence of the interchange for a random orthonormal pair of rows.
  const DenseMatrix p{{0.6, 0.8, 0.0, 0.0}, {0.0, 0.0, 0.8, -0.6}};
  const DenseVector b = rng.uniform_vector(4, -1.0, 1.0), s = rng.uniform_vector(4, -1.0, 1.0);
  const DenseVector once = dii_apply(b, s, p);
  const double idem = max_abs_diff(dii_apply(once, s, p).span(), once.span());
  return {"dii_identity", worst <= 1e-12 && idem <= 1e-12,
          "max diff " + sci(worst) + ", idempotence " + sci(idem)};
}

CheckResult check_block_locality(SeededRng rng) {
  bool ok = true;
  for (RoadVariant v : kVariants) {
    RoadAdapter a = random_road(v, 16, rng);
    const DenseVector h = rng.uniform_vector(16, -1.0, 1.0);
    const DenseVector before = apply_factored(factorize(a), h);
    const std::size_t per = a.params_per_block();
    for (std::size_t j = 3 * per; j < 4 * per; ++j) {
      a.theta()[j] += 0.3;
      a.alpha()[j] *= 1.1;
    }
    const DenseVector after = apply_factored(factorize(a), h);
    for (std::size_t k = 0; k < 16; ++k)
      if (k / 2 != 3 && after[k] != before[k]) ok = false;
  }
  return {"block_locality", ok, ok ? "other blocks bitwise unchanged" : "leak across blocks"};
}

CheckResult check_noninterference(SeededRng rng) {
  const std::size_t d2 = 16;
  const SubspaceMask mask = SubspaceMask::upper_half(d2);
  bool ok = true;
  for (RoadVariant v : kVariants) {
    ToyModel m;
    m.layers.push_back({rng.uniform_matrix(d2, d2, -0.5, 0.5), random_road(v, d2, rng),
                        Nonlinearity::none, {}});
    m.output_weights.assign(d2, 0.0);
    for (std::size_t blk : mask.block_ids) m.output_weights[2 * blk] = m.output_weights[2 * blk + 1] = 1.0;
    Dataset data;
    for (int n = 0; n < 4; ++n) {
      data.inputs.push_back(rng.uniform_vector(d2, -1.0, 1.0));
      data.targets.push_back(rng.uniform_vector(d2, -1.0, 1.0));
    }
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<double> g(flat_params(m).size());
    loss_and_grad(m, data, rows, g);
    const auto& a = std::get<RoadAdapter>(*m.layers[0].adapter);
    const std::size_t n = a.theta().size(), per = a.params_per_block();
    for (std::size_t j = 0; j < n; ++j) {
      if (mask.contains(j / per)) continue;
      if (g[j] != 0.0 || g[n + j] != 0.0) ok = false;
    }
  }
  return {"subspace_noninterference", ok, ok ? "gradients outside mask exactly zero" : "nonzero"};
}

CheckResult check_compose(SeededRng rng) {
  const std::size_t d2 = 16;
  const RoadAdapter a = random_road(RoadVariant::Road2, d2, rng);
  const RoadAdapter b = random_road(RoadVariant::Road2, d2, rng);
  const std::pair<RoadAdapter, SubspaceMask> parts[] = {{a, SubspaceMask::upper_half(d2)},
                                                       {b, SubspaceMask::lower_half(d2)}};
  const RoadAdapter c = compose(parts);
  const DenseVector h = rng.uniform_vector(d2, -1.0, 1.0);
  const DenseVector zc = apply_factored(factorize(c), h);
  const DenseVector za = apply_factored(factorize(a), h);
  const DenseVector zb = apply_factored(factorize(b), h);
  bool ok = true;
  for (std::size_t k = 0; k < d2; ++k) ok = ok && zc[k] == (k < d2 / 2 ? za[k] : zb[k]);
  bool conflict = false;
  try {
    const std::pair<RoadAdapter, SubspaceMask> bad[] = {{a, SubspaceMask::range(0, 3)},
                                                       {b, SubspaceMask::range(2, 8)}};
    compose(bad);
  } catch (const CompositionConflict& e) {
    conflict = e.colliding_blocks() == std::vector<std::size_t>{2};
  }
  return {"composition", ok && conflict,
          std::string(ok ? "stitched outputs exact" : "stitched outputs differ") +
              (conflict ? "" : "; overlap not reported")};
}

CheckResult check_serialization(SeededRng rng) {
  bool ok = true;
  for (int c = 0; c < 50 && ok; ++c) {
    const RoadAdapter a = random_road(kVariants[c % 3], 2 + 2 * rng.below(8), rng);
    const NamedAdapter layer{"layer" + std::to_string(c), a};
    const auto back = decode_adapters(encode_adapters(std::span<const NamedAdapter>(&layer, 1)));
    ok = back.size() == 1 && back[0].name == layer.name && back[0].adapter == quantize_f32(a);
  }
  std::size_t undetected = 0;
  const NamedAdapter small{"x", random_road(RoadVariant::Road2, 4, rng)};
  const auto bytes = encode_adapters(std::span<const NamedAdapter>(&small, 1));
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto bad = bytes;
    bad[i] ^= 0x5A;
    try {
      const auto got = decode_adapters(bad);
      if (!(got.size() == 1 && got[0].adapter == quantize_f32(small.adapter))) ++undetected;
    } catch (const CorruptFileError&) {
    }
  }
  return {"serialization", ok && undetected == 0,
          std::string(ok ? "round trip exact" : "round trip mismatch") + ", undetected flips " +
              std::to_string(undetected)};
}

CheckResult check_serving(std::uint64_t seed) {
  double worst = 0.0;
  bool counts = true;
  const std::size_t b = 6, l = 3, d1 = 12, d2 = 10, r = 3;
  ServingFixture fx = make_serving_fixture(b, d1, d2, r, seed, RoadVariant::Road1, true);
  for (const auto* ids : {&fx.lora_ids, &fx.road_ids, &fx.diag_ids}) {
    const auto batch = make_batch<double>(l, d1, *ids, seed + 1);
    const auto ref = serve_sequential_oracle(fx.registry, batch, fx.w0);
    for (ServeMode mode : {ServeMode::prefill, ServeMode::decode}) {
      FlopCounter fc;
      Tensor3<double> got;
      std::uint64_t expect = 0;
      if (ids == &fx.lora_ids) {
        got = serve_lora_bmm(fx.registry, batch, fx.w0, mode, &fc);
        expect = lora_adapter_flops(b, l, d1, d2, r);
      } else if (ids == &fx.road_ids) {
        got = serve_road_elementwise(fx.registry, batch, fx.w0, mode, &fc);
        expect = road_adapter_flops(b, l, d2);
      } else {
        got = serve_diag_elementwise(fx.registry, batch, fx.w0, mode, &fc);
        expect = diag_adapter_flops(b, l, d2);
      }
      worst = std::max(worst, max_abs_diff(got.data, ref.data));
      counts = counts && fc.total() == expect;
    }
  }
  return {"serving_oracle", worst <= 1e-12 && counts,
          "max abs diff " + sci(worst) + (counts ? "" : "; flop counts off")};
}

CheckResult check_peft_freeze(std::uint64_t seed) {
  RecoveryTask task = make_recovery_task(8, seed, 64);
  ToyModel m;
  m.layers.push_back({task.w0, RoadAdapter::identity(RoadVariant::Road1, 8), Nonlinearity::none, {}});
  TrainConfig cfg = recovery_config(seed);
  cfg.epochs = 3;
  cfg.stop_below = 0.0;
  const TrainTrace t1 = train(m, task.data, cfg);
  const bool frozen = m.layers[0].w0 == task.w0;
  ToyModel m2;
  m2.layers.push_back({task.w0, RoadAdapter::identity(RoadVariant::Road1, 8), Nonlinearity::none, {}});
  const TrainTrace t2 = train(m2, task.data, cfg);
  const bool same = t1.epoch_loss == t2.epoch_loss;
  return {"peft_freeze_and_determinism", frozen && same,
          std::string(frozen ? "W0 bitwise unchanged" : "W0 modified") +
              (same ? ", traces identical" : ", traces differ")};
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed) {
  const SeededRng root(seed);
  std::vector<std::pair<std::string, std::function<CheckResult()>>> checks = {
      {"factored_equals_dense", [&] { return check_factored(root.fork(1)); }},
      {"merge_consistency", [&] { return check_merge(root.fork(2)); }},
      {"orthogonality", [&] { return check_orthogonality(root.fork(3)); }},
      {"param_counts", [] { return check_param_counts(); }},
      {"gradients", [&] { return check_gradients(seed); }},
      {"dii_identity", [&] { return check_dii(root.fork(4)); }},
      {"block_locality", [&] { return check_block_locality(root.fork(5)); }},
      {"subspace_noninterference", [&] { return check_noninterference(root.fork(6)); }},
      {"composition", [&] { return check_compose(root.fork(7)); }},
      {"serialization", [&] { return check_serialization(root.fork(8)); }},
      {"serving_oracle", [&] { return check_serving(seed); }},
      {"peft_freeze_and_determinism", [&] { return check_peft_freeze(seed); }},
  };
  std::vector<CheckResult> out;
  for (auto& [name, fn] : checks) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("exception: ") + e.what()});
    }
  }
  return out;
}

}  // namespace road

// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#include "road/serving.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "road/error.hpp"

namespace road {

void AdapterRegistry::add(std::string id, ServingAdapter adapter) {
  if (frozen_) throw PreconditionError("registry is frozen; cannot add '" + id + "'");
  if (entries_.count(id)) throw PreconditionError("duplicate adapter id '" + id + "'");
  entries_.emplace(std::move(id), std::move(adapter));
}

const ServingAdapter& AdapterRegistry::at(const std::string& id) const {
  const auto it = entries_.find(id);
  if (it == entries_.end()) throw RoutingError("unknown adapter id '" + id + "'");
  return it->second;
}

template <typename T>
void validate_batch(const AdapterRegistry& reg, const HeteroBatch<T>& batch) {
  if (!reg.frozen()) throw PreconditionError("registry must be frozen before serving");
  if (batch.b() < 1 || batch.l() < 1) throw PreconditionError("batch needs b >= 1 and l >= 1");
  if (batch.adapter_ids.size() != batch.b()) {
    throw DimensionError("adapter_ids length " + std::to_string(batch.adapter_ids.size()) +
                         " != b " + std::to_string(batch.b()));
  }
  if (batch.features.data.size() != batch.b() * batch.l() * batch.d1()) {
    throw DimensionError("batch features size does not match b x l x d1");
  }
  for (const auto& id : batch.adapter_ids) (void)reg.at(id);
}

std::string_view to_string(Kernel k) {
  switch (k) {
    case Kernel::lora_bmm: return "lora_bmm";
    case Kernel::lora_merged_homogeneous: return "lora_merged_homogeneous";
    case Kernel::road_elementwise: return "road_elementwise";
    case Kernel::diag_elementwise: return "diag_elementwise";
  }
  return "unknown";
}

std::string_view to_string(ServeMode m) { return m == ServeMode::decode ? "decode" : "prefill"; }
std::string_view to_string(BenchScope s) { return s == BenchScope::adapter ? "adapter" : "layer"; }

std::optional<Kernel> kernel_from_string(std::string_view s) {
  for (Kernel k : {Kernel::lora_bmm, Kernel::lora_merged_homogeneous, Kernel::road_elementwise,
                   Kernel::diag_elementwise}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::uint64_t lora_adapter_flops(std::size_t b, std::size_t l, std::size_t d1, std::size_t d2,
                                 std::size_t r) {
  return static_cast<std::uint64_t>(b) * l * 2 * r * (d1 + d2);
}

std::uint64_t road_adapter_flops(std::size_t b, std::size_t l, std::size_t d2) {
  return static_cast<std::uint64_t>(b) * l * 3 * d2;
}

std::uint64_t diag_adapter_flops(std::size_t b, std::size_t l, std::size_t d2) {
  return static_cast<std::uint64_t>(b) * l * d2;
}

namespace {

// One token row: which request it belongs to and where its data lives.
template <typename T>
struct Row {
  std::size_t req;
  const T* x;
  const T* z0;
  T* out;
};

template <typename T>
std::vector<T> cast_values(std::span<const double> v) {
  return std::vector<T>(v.begin(), v.end());
}

template <bool Count, typename T>
void base_rows(const std::vector<T>& w, std::size_t d1, std::size_t d2,
               std::span<const Row<T>> rows, FlopCounter* fc) {
  // Groups of 8 tokens share each pass over W; column tiles keep the group's
  // partial outputs in L1. Every output still sums over i in ascending order.
  constexpr std::size_t kGroup = 8;
  constexpr std::size_t kTile = 512;
  for (std::size_t g0 = 0; g0 < rows.size(); g0 += kGroup) {
    const std::size_t g1 = std::min(rows.size(), g0 + kGroup);
    for (std::size_t n = g0; n < g1; ++n) std::fill_n(rows[n].out, d2, T(0));
    for (std::size_t j0 = 0; j0 < d2; j0 += kTile) {
      const std::size_t j1 = std::min(d2, j0 + kTile);
      for (std::size_t i = 0; i < d1; ++i) {
        const T* wrow = w.data() + i * d2;
        for (std::size_t n = g0; n < g1; ++n) {
          const T xi = rows[n].x[i];
          T* o = rows[n].out;
          for (std::size_t j = j0; j < j1; ++j) o[j] += xi * wrow[j];
        }
      }
    }
    if constexpr (Count) {
      fc->mul += (g1 - g0) * d1 * d2;
      fc->add += (g1 - g0) * d1 * d2;
    }
  }
}

template <typename T>
struct LoraStack {
  std::size_t d1 = 0, d2 = 0, r = 0;
  std::vector<T> b;  // per request: d1 x r
  std::vector<T> a;  // per request: r x d2, pre-multiplied by scaling
};

template <typename T>
LoraStack<T> gather_lora(const AdapterRegistry& reg, std::span<const std::string> ids,
                         std::size_t d1, std::size_t d2) {
  LoraStack<T> s;
  s.d1 = d1;
  s.d2 = d2;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto* l = std::get_if<LoraAdapter>(&reg.at(ids[i]));
    if (!l) throw RoutingError("lora_bmm: adapter '" + ids[i] + "' is not a LoRA adapter");
    if (i == 0) s.r = l->rank();
    if (l->rank() != s.r) throw DimensionError("lora_bmm: all adapters in a call must share r");
    if (l->d1() != d1 || l->d2() != d2 || l->a.rows() != l->rank()) {
      throw DimensionError("lora_bmm: adapter '" + ids[i] + "' shape does not match W0");
    }
    const auto bv = cast_values<T>(l->b.span());
    s.b.insert(s.b.end(), bv.begin(), bv.end());
    for (double v : l->a.span()) s.a.push_back(static_cast<T>(l->scaling * v));
  }
  return s;
}

template <bool Count, typename T>
void lora_rows(const LoraStack<T>& s, std::span<const Row<T>> rows, FlopCounter* fc) {
  const std::size_t r = s.r, d1 = s.d1, d2 = s.d2;
  std::vector<T> tmp(r);
  for (const Row<T>& row : rows) {
    const T* bq = s.b.data() + row.req * d1 * r;
    const T* aq = s.a.data() + row.req * r * d2;
    std::fill(tmp.begin(), tmp.end(), T(0));
    for (std::size_t i = 0; i < d1; ++i) {
      const T xi = row.x[i];
      const T* brow = bq + i * r;
      for (std::size_t k = 0; k < r; ++k) tmp[k] += xi * brow[k];
    }
    std::copy_n(row.z0, d2, row.out);
    for (std::size_t k = 0; k < r; ++k) {
      const T tk = tmp[k];
      const T* arow = aq + k * d2;
      for (std::size_t j = 0; j < d2; ++j) row.out[j] += tk * arow[j];
    }
    if constexpr (Count) {
      fc->mul += d1 * r + r * d2;
      fc->add += d1 * r + r * d2;
    }
  }
}

template <typename T>
struct RoadStack {
  std::size_t d2 = 0;
  std::vector<T> v1, v2;  // per request: d2 each
};

template <typename T>
RoadStack<T> gather_road(const AdapterRegistry& reg, std::span<const std::string> ids,
                         std::size_t d2) {
  RoadStack<T> s;
  s.d2 = d2;
  for (const auto& id : ids) {
    const auto* a = std::get_if<RoadAdapter>(&reg.at(id));
    if (!a) throw RoutingError("road_elementwise: adapter '" + id + "' is not a RoAd adapter");
    if (a->d2() != d2) {
      throw DimensionError("road_elementwise: adapter '" + id + "' has d2 " +
                           std::to_string(a->d2()) + ", W0 has " + std::to_string(d2));
    }
    const FactoredRotation f = factorize(*a);
    s.v1.insert(s.v1.end(), f.v1.begin(), f.v1.end());
    s.v2.insert(s.v2.end(), f.v2.begin(), f.v2.end());
  }
  return s;
}

template <bool Count, typename T>
void road_rows(const RoadStack<T>& s, std::span<const Row<T>> rows, FlopCounter* fc) {
  const std::size_t d2 = s.d2;
  for (const Row<T>& row : rows) {
    rotate_pairs<T>(std::span<const T>(s.v1.data() + row.req * d2, d2),
                    std::span<const T>(s.v2.data() + row.req * d2, d2),
                    std::span<const T>(row.z0, d2), std::span<T>(row.out, d2));
    if constexpr (Count) {
      fc->mul += 2 * d2;
      fc->add += d2;
    }
  }
}

template <typename T>
std::vector<T> gather_diag(const AdapterRegistry& reg, std::span<const std::string> ids,
                           std::size_t d2) {
  std::vector<T> l;
  for (const auto& id : ids) {
    const auto* a = std::get_if<DiagScaleAdapter>(&reg.at(id));
    if (!a) throw RoutingError("diag_elementwise: adapter '" + id + "' is not a diagonal adapter");
    if (a->d2() != d2) throw DimensionError("diag_elementwise: adapter '" + id + "' d2 mismatch");
    l.insert(l.end(), a->l.begin(), a->l.end());
  }
  return l;
}

template <bool Count, typename T>
void diag_rows(const std::vector<T>& l, std::size_t d2, std::span<const Row<T>> rows,
               FlopCounter* fc) {
  for (const Row<T>& row : rows) {
    const T* g = l.data() + row.req * d2;
    for (std::size_t j = 0; j < d2; ++j) row.out[j] = g[j] * row.z0[j];
    if constexpr (Count) fc->mul += d2;
  }
}

// Drives base product + adapter over all tokens in prefill or decode order.
template <typename T, typename AdapterFn>
Tensor3<T> serve_with(const HeteroBatch<T>& batch, const std::vector<T>& w, std::size_t d2,
                      ServeMode mode, AdapterFn&& adapter) {
  const std::size_t b = batch.b(), l = batch.l(), d1 = batch.d1();
  Tensor3<T> z0(b, l, d2), out(b, l, d2);
  std::vector<Row<T>> rows;
  auto run = [&](std::size_t t0, std::size_t t1) {
    rows.clear();
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t t = t0; t < t1; ++t)
        rows.push_back({i, batch.features.token(i, t).data(), z0.token(i, t).data(),
                        out.token(i, t).data()});
    std::vector<Row<T>> base(rows);
    for (auto& r : base) r.out = const_cast<T*>(r.z0);
    base_rows<false, T>(w, d1, d2, base, nullptr);
    adapter(std::span<const Row<T>>(rows));
  };
  if (mode == ServeMode::prefill) {
    run(0, l);
  } else {
    for (std::size_t t = 0; t < l; ++t) run(t, t + 1);
  }
  return out;
}

void check_w0(const DenseMatrix& w0, std::size_t d1) {
  if (w0.rows() != d1) {
    throw DimensionError("W0 has " + std::to_string(w0.rows()) + " rows, batch d1 is " +
                         std::to_string(d1));
  }
}

}  // namespace

template <typename T>
Tensor3<T> base_product(const HeteroBatch<T>& batch, const DenseMatrix& w0) {
  check_w0(w0, batch.d1());
  const auto w = cast_values<T>(w0.span());
  return serve_with(batch, w, w0.cols(), ServeMode::prefill, [d2 = w0.cols()](std::span<const Row<T>> rows) {
    for (const Row<T>& r : rows) std::copy_n(r.z0, d2, r.out);
  });
}

template <typename T>
Tensor3<T> serve_lora_bmm(const AdapterRegistry& reg, const HeteroBatch<T>& batch,
                          const DenseMatrix& w0, ServeMode mode, FlopCounter* adapter_flops) {
  validate_batch(reg, batch);
  check_w0(w0, batch.d1());
  const auto stack = gather_lora<T>(reg, batch.adapter_ids, batch.d1(), w0.cols());
  const auto w = cast_values<T>(w0.span());
  return serve_with(batch, w, w0.cols(), mode, [&](std::span<const Row<T>> rows) {
    if (adapter_flops) {
      lora_rows<true>(stack, rows, adapter_flops);
    } else {
      lora_rows<false>(stack, rows, nullptr);
    }
  });
}

template <typename T>
Tensor3<T> serve_lora_merged_homogeneous(const AdapterRegistry& reg, const HeteroBatch<T>& batch,
                                         const DenseMatrix& w0, ServeMode mode) {
  validate_batch(reg, batch);
  check_w0(w0, batch.d1());
  const std::string& id = batch.adapter_ids.front();
  for (const auto& other : batch.adapter_ids) {
    if (other != id) throw RoutingError("lora_merged_homogeneous: batch routes to several adapters");
  }
  const auto* lora = std::get_if<LoraAdapter>(&reg.at(id));
  if (!lora) throw RoutingError("lora_merged_homogeneous: adapter '" + id + "' is not LoRA");
  const auto w = cast_values<T>(lora_merge(*lora, w0).span());
  return serve_with(batch, w, w0.cols(), mode, [d2 = w0.cols()](std::span<const Row<T>> rows) {
    for (const Row<T>& r : rows) std::copy_n(r.z0, d2, r.out);
  });
}

template <typename T>
Tensor3<T> serve_road_elementwise(const AdapterRegistry& reg, const HeteroBatch<T>& batch,
                                  const DenseMatrix& w0, ServeMode mode,
                                  FlopCounter* adapter_flops) {
  validate_batch(reg, batch);
  check_w0(w0, batch.d1());
  const auto stack = gather_road<T>(reg, batch.adapter_ids, w0.cols());
  const auto w = cast_values<T>(w0.span());
  return serve_with(batch, w, w0.cols(), mode, [&](std::span<const Row<T>> rows) {
    if (adapter_flops) {
      road_rows<true>(stack, rows, adapter_flops);
    } else {
      road_rows<false>(stack, rows, nullptr);
    }
  });
}

template <typename T>
Tensor3<T> serve_diag_elementwise(const AdapterRegistry& reg, const HeteroBatch<T>& batch,
                                  const DenseMatrix& w0, ServeMode mode,
                                  FlopCounter* adapter_flops) {
  validate_batch(reg, batch);
  check_w0(w0, batch.d1());
  const auto gains = gather_diag<T>(reg, batch.adapter_ids, w0.cols());
  const auto w = cast_values<T>(w0.span());
  const std::size_t d2 = w0.cols();
  return serve_with(batch, w, d2, mode, [&](std::span<const Row<T>> rows) {
    if (adapter_flops) {
      diag_rows<true>(gains, d2, rows, adapter_flops);
    } else {
      diag_rows<false>(gains, d2, rows, nullptr);
    }
  });
}

Tensor3<double> serve_sequential_oracle(const AdapterRegistry& reg,
                                        const HeteroBatch<double>& batch, const DenseMatrix& w0) {
  validate_batch(reg, batch);
  check_w0(w0, batch.d1());
  Tensor3<double> out(batch.b(), batch.l(), w0.cols());
  for (std::size_t i = 0; i < batch.b(); ++i) {
    const ServingAdapter& adapter = reg.at(batch.adapter_ids[i]);
    for (std::size_t t = 0; t < batch.l(); ++t) {
      const auto tok = batch.features.token(i, t);
      const DenseVector x(std::vector<double>(tok.begin(), tok.end()));
      DenseVector z;
      if (const auto* l = std::get_if<LoraAdapter>(&adapter)) {
        z = lora_apply(*l, w0, x);
      } else if (const auto* r = std::get_if<RoadAdapter>(&adapter)) {
        z = apply_dense_oracle(*r, matvec(w0, x));
      } else {
        z = diag_scale_apply(std::get<DiagScaleAdapter>(adapter), matvec(w0, x));
      }
      std::copy(z.values().begin(), z.values().end(), out.token(i, t).begin());
    }
  }
  return out;
}

ServingFixture make_serving_fixture(std::size_t adapters, std::size_t d1, std::size_t d2,
                                    std::size_t r, std::uint64_t seed, RoadVariant variant,
                                    bool mixed_road_variants) {
  SeededRng rng = SeededRng(seed).fork(0x73657276ULL);
  const double ws = 1.0 / std::sqrt(static_cast<double>(d1));
  ServingFixture fx{{}, rng.uniform_matrix(d1, d2, -ws, ws), {}, {}, {}};
  const RoadVariant cycle[] = {RoadVariant::Road1, RoadVariant::Road2, RoadVariant::Road4};
  for (std::size_t i = 0; i < adapters; ++i) {
    const std::string n = std::to_string(i);
    fx.lora_ids.push_back("lora-" + n);
    fx.registry.add(fx.lora_ids.back(),
                    LoraAdapter{rng.uniform_matrix(d1, r, -ws, ws), rng.uniform_matrix(r, d2, -0.5, 0.5),
                                1.0});

    const RoadVariant v = mixed_road_variants ? cycle[i % 3] : variant;
    const std::size_t na = angle_count(v, d2);
    std::vector<double> theta(na), alpha(na);
    for (double& t : theta) t = rng.uniform(-std::numbers::pi, std::numbers::pi);
    for (double& a : alpha) a = rng.uniform(0.5, 1.5);
    fx.road_ids.push_back("road-" + n);
    fx.registry.add(fx.road_ids.back(), RoadAdapter(v, d2, std::move(theta), std::move(alpha)));

    std::vector<double> gains(d2);
    for (double& g : gains) g = rng.uniform(0.5, 1.5);
    fx.diag_ids.push_back("diag-" + n);
    fx.registry.add(fx.diag_ids.back(), DiagScaleAdapter{std::move(gains)});
  }
  fx.registry.freeze();
  return fx;
}

template <typename T>
HeteroBatch<T> make_batch(std::size_t l, std::size_t d1, std::vector<std::string> ids,
                          std::uint64_t seed) {
  SeededRng rng = SeededRng(seed).fork(0x6261746368ULL);
  HeteroBatch<T> batch{Tensor3<T>(ids.size(), l, d1), std::move(ids)};
  for (T& v : batch.features.data) v = static_cast<T>(rng.uniform(-1.0, 1.0));
  return batch;
}

std::int64_t timer_resolution_ns() {
  using clock = std::chrono::steady_clock;
  std::int64_t best = 0;
  for (int i = 0; i < 64; ++i) {
    const auto t0 = clock::now();
    auto t1 = clock::now();
    while (t1 == t0) t1 = clock::now();
    const auto d = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
    if (best == 0 || (d > 0 && d < best)) best = d;
  }
  return std::max<std::int64_t>(best, 1);
}

namespace {

// One timed kernel at one sweep point. `step(s, fc)` runs decode step s (or the
// whole prefill when there is a single step); fc is non-null on the counting pass.
struct BenchKernel {
  Kernel kernel;
  std::function<void(std::size_t, FlopCounter*)> step;
  std::vector<std::int64_t> rep_ns;
  FlopCounter flops;
};

template <typename T>
std::vector<BenchReport> bench_point(const WorkloadSpec& spec, std::size_t b, std::size_t tokens,
                                     std::size_t r, std::size_t repetitions, std::size_t warmup,
                                     std::int64_t resolution) {
  const std::size_t d1 = spec.d1, d2 = spec.d2;
  const bool decode = spec.mode == ServeMode::decode;
  const bool layer = spec.scope == BenchScope::layer;
  const std::uint64_t point_seed = spec.seed ^ (b * 0x100000001B3ULL) ^ (tokens << 20) ^ (r << 40);
  ServingFixture fx = make_serving_fixture(b, d1, d2, r, point_seed, spec.road_variant);

  // Decode cycles through a small pool of distinct per-request token inputs.
  const std::size_t pool = decode ? std::min<std::size_t>(16, tokens) : 1;
  const std::size_t per_slot = decode ? 1 : tokens;
  const std::size_t steps = decode ? tokens : 1;

  std::vector<std::string> any_ids(fx.lora_ids);
  std::vector<HeteroBatch<T>> inputs;
  for (std::size_t p = 0; p < pool; ++p) {
    inputs.push_back(make_batch<T>(per_slot, d1, any_ids, point_seed + 7919 * (p + 1)));
  }
  const auto w0 = cast_values<T>(fx.w0.span());
  std::vector<Tensor3<T>> z0;
  for (const auto& in : inputs) {
    Tensor3<T> z(b, per_slot, d2);
    std::vector<Row<T>> rows;
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t t = 0; t < per_slot; ++t)
        rows.push_back({i, in.features.token(i, t).data(), nullptr, z.token(i, t).data()});
    base_rows<false, T>(w0, d1, d2, rows, nullptr);
    z0.push_back(std::move(z));
  }

  const auto lora = gather_lora<T>(fx.registry, fx.lora_ids, d1, d2);
  const auto roads = gather_road<T>(fx.registry, fx.road_ids, d2);
  const auto gains = gather_diag<T>(fx.registry, fx.diag_ids, d2);
  const auto merged =
      cast_values<T>(lora_merge(std::get<LoraAdapter>(fx.registry.at(fx.lora_ids[0])), fx.w0).span());

  struct Buffers {
    Tensor3<T> z, out;
    std::vector<Row<T>> rows, base;
  };
  std::vector<BenchKernel> kernels;
  std::vector<Buffers> bufs(spec.kernels.size());

  for (std::size_t k = 0; k < spec.kernels.size(); ++k) {
    const Kernel kind = spec.kernels[k];
    if (kind == Kernel::lora_merged_homogeneous && !layer) {
      throw PreconditionError(
          "lora_merged_homogeneous has no serve-time adapter stage; bench it with layer scope");
    }
    Buffers& buf = bufs[k];
    buf.z = Tensor3<T>(b, per_slot, d2);
    buf.out = Tensor3<T>(b, per_slot, d2);
    auto prepare_rows = [&, kPtr = &buf](std::size_t s) {
      const std::size_t p = s % pool;
      kPtr->rows.clear();
      kPtr->base.clear();
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t t = 0; t < per_slot; ++t) {
          const T* x = inputs[p].features.token(i, t).data();
          const T* zin = layer ? kPtr->z.token(i, t).data() : z0[p].token(i, t).data();
          kPtr->rows.push_back({i, x, zin, kPtr->out.token(i, t).data()});
          kPtr->base.push_back({i, x, nullptr, kPtr->z.token(i, t).data()});
        }
    };
    std::function<void(std::size_t, FlopCounter*)> fn;
    switch (kind) {
      case Kernel::lora_bmm:
        fn = [&, prepare_rows, kPtr = &buf](std::size_t s, FlopCounter* fc) {
          prepare_rows(s);
          if (fc) {
            if (layer) base_rows<true, T>(w0, d1, d2, kPtr->base, fc);
            lora_rows<true>(lora, std::span<const Row<T>>(kPtr->rows), fc);
          } else {
            if (layer) base_rows<false, T>(w0, d1, d2, kPtr->base, nullptr);
            lora_rows<false>(lora, std::span<const Row<T>>(kPtr->rows), nullptr);
          }
        };
        break;
      case Kernel::lora_merged_homogeneous:
        fn = [&, prepare_rows, kPtr = &buf](std::size_t s, FlopCounter* fc) {
          prepare_rows(s);
          for (auto& row : kPtr->base) row.out = kPtr->out.data.data() + (row.out - kPtr->z.data.data());
          if (fc) {
            base_rows<true, T>(merged, d1, d2, kPtr->base, fc);
          } else {
            base_rows<false, T>(merged, d1, d2, kPtr->base, nullptr);
          }
        };
        break;
      case Kernel::road_elementwise:
        fn = [&, prepare_rows, kPtr = &buf](std::size_t s, FlopCounter* fc) {
          prepare_rows(s);
          if (fc) {
            if (layer) base_rows<true, T>(w0, d1, d2, kPtr->base, fc);
            road_rows<true>(roads, std::span<const Row<T>>(kPtr->rows), fc);
          } else {
            if (layer) base_rows<false, T>(w0, d1, d2, kPtr->base, nullptr);
            road_rows<false>(roads, std::span<const Row<T>>(kPtr->rows), nullptr);
          }
        };
        break;
      case Kernel::diag_elementwise:
        fn = [&, prepare_rows, kPtr = &buf](std::size_t s, FlopCounter* fc) {
          prepare_rows(s);
          if (fc) {
            if (layer) base_rows<true, T>(w0, d1, d2, kPtr->base, fc);
            diag_rows<true>(gains, d2, std::span<const Row<T>>(kPtr->rows), fc);
          } else {
            if (layer) base_rows<false, T>(w0, d1, d2, kPtr->base, nullptr);
            diag_rows<false>(gains, d2, std::span<const Row<T>>(kPtr->rows), nullptr);
          }
        };
        break;
    }
    kernels.push_back({kind, std::move(fn), {}, {}});
  }

  for (auto& k : kernels)
    for (std::size_t s = 0; s < steps; ++s) k.step(s, &k.flops);

  using clock = std::chrono::steady_clock;
  for (std::size_t rep = 0; rep < warmup + repetitions; ++rep) {
    std::vector<std::int64_t> acc(kernels.size(), 0);
    for (std::size_t s = 0; s < steps; ++s) {
      // Alternate the order so no kernel always runs right after the same one.
      for (std::size_t kk = 0; kk < kernels.size(); ++kk) {
        const std::size_t k = (s + rep) % 2 == 0 ? kk : kernels.size() - 1 - kk;
        const auto t0 = clock::now();
        kernels[k].step(s, nullptr);
        const auto t1 = clock::now();
        acc[k] += std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
      }
    }
    if (rep >= warmup)
      for (std::size_t k = 0; k < kernels.size(); ++k) kernels[k].rep_ns.push_back(acc[k]);
  }

  std::vector<BenchReport> out;
  for (auto& k : kernels) {
    std::sort(k.rep_ns.begin(), k.rep_ns.end());
    const std::int64_t med = k.rep_ns[k.rep_ns.size() / 2];
    if (med < 100 * resolution) {
      throw MeasurementError(std::string(to_string(k.kernel)) + ": median " + std::to_string(med) +
                             " ns is under 100 clock ticks of " + std::to_string(resolution) +
                             " ns; use a larger workload");
    }
    BenchReport rep;
    rep.kernel = k.kernel;
    rep.mode = spec.mode;
    rep.scope = spec.scope;
    rep.b = b;
    rep.l = tokens;
    rep.d1 = d1;
    rep.d2 = d2;
    rep.r = r;
    rep.wall_ns = med;
    rep.flops = k.flops.total();
    rep.tokens_per_second = static_cast<double>(b * tokens) / (static_cast<double>(med) * 1e-9);
    out.push_back(rep);
  }
  return out;
}

}  // namespace

std::vector<BenchReport> run_bench(const WorkloadSpec& spec, std::size_t repetitions,
                                   std::size_t warmup) {
  if (repetitions < 3) throw PreconditionError("run_bench: repetitions must be at least 3");
  if (warmup < 1) throw PreconditionError("run_bench: warmup must be at least 1");
  if (spec.kernels.empty()) throw PreconditionError("run_bench: no kernels selected");
  if (spec.d2 == 0 || spec.d2 % 2 != 0) throw DimensionError("run_bench: d2 must be even");
  const std::int64_t res = timer_resolution_ns();
  std::vector<BenchReport> all;
  for (std::size_t b : spec.batch_sizes) {
    for (std::size_t tokens : spec.token_counts) {
      for (std::size_t r : spec.ranks) {
        if (b < 1 || tokens < 1 || r < 1) throw PreconditionError("run_bench: b, tokens, r >= 1");
        auto part = spec.precision == Precision::f32
                        ? bench_point<float>(spec, b, tokens, r, repetitions, warmup, res)
                        : bench_point<double>(spec, b, tokens, r, repetitions, warmup, res);
        all.insert(all.end(), part.begin(), part.end());
      }
    }
  }
  return all;
}

#define ROAD_INSTANTIATE(T)                                                                      \
  template void validate_batch<T>(const AdapterRegistry&, const HeteroBatch<T>&);               \
  template Tensor3<T> base_product<T>(const HeteroBatch<T>&, const DenseMatrix&);               \
  template Tensor3<T> serve_lora_bmm<T>(const AdapterRegistry&, const HeteroBatch<T>&,          \
                                        const DenseMatrix&, ServeMode, FlopCounter*);           \
  template Tensor3<T> serve_lora_merged_homogeneous<T>(const AdapterRegistry&,                  \
                                                       const HeteroBatch<T>&,                    \
                                                       const DenseMatrix&, ServeMode);           \
  template Tensor3<T> serve_road_elementwise<T>(const AdapterRegistry&, const HeteroBatch<T>&,  \
                                                const DenseMatrix&, ServeMode, FlopCounter*);   \
  template Tensor3<T> serve_diag_elementwise<T>(const AdapterRegistry&, const HeteroBatch<T>&,  \
                                                const DenseMatrix&, ServeMode, FlopCounter*);   \
  template HeteroBatch<T> make_batch<T>(std::size_t, std::size_t, std::vector<std::string>,     \
                                        std::uint64_t);

ROAD_INSTANTIATE(float)
ROAD_INSTANTIATE(double)

#undef ROAD_INSTANTIATE

}  // namespace road

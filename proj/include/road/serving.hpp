// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "road/baselines.hpp"
#include "road/numeric.hpp"
#include "road/road_adapter.hpp"

namespace road {

using ServingAdapter = std::variant<RoadAdapter, LoraAdapter, DiagScaleAdapter>;

/// Named adapters for multi-tenant serving. Must be frozen before any serving
/// call; afterwards it is read-only and safe to share between threads.
class AdapterRegistry {
 public:
  void add(std::string id, ServingAdapter adapter);
  void freeze() noexcept { frozen_ = true; }
  bool frozen() const noexcept { return frozen_; }

  bool contains(const std::string& id) const { return entries_.count(id) != 0; }
  /// Throws RoutingError for unknown ids.
  const ServingAdapter& at(const std::string& id) const;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::string, ServingAdapter> entries_;
  bool frozen_ = false;
};

/// b x l x d activations, request-major.
template <typename T>
struct Tensor3 {
  std::size_t b = 0, l = 0, d = 0;
  std::vector<T> data;

  Tensor3() = default;
  Tensor3(std::size_t b_, std::size_t l_, std::size_t d_) : b(b_), l(l_), d(d_), data(b_ * l_ * d_) {}

  std::span<T> token(std::size_t i, std::size_t t) { return {data.data() + (i * l + t) * d, d}; }
  std::span<const T> token(std::size_t i, std::size_t t) const {
    return {data.data() + (i * l + t) * d, d};
  }
};

/// b requests of up to l tokens each, request i routed to adapter_ids[i].
template <typename T>
struct HeteroBatch {
  Tensor3<T> features;  // b x l x d1
  std::vector<std::string> adapter_ids;

  std::size_t b() const noexcept { return features.b; }
  std::size_t l() const noexcept { return features.l; }
  std::size_t d1() const noexcept { return features.d; }
};

/// Throws PreconditionError/RoutingError unless the batch is non-empty, the
/// registry is frozen and every id resolves.
template <typename T>
void validate_batch(const AdapterRegistry& reg, const HeteroBatch<T>& batch);

enum class Kernel { lora_bmm, lora_merged_homogeneous, road_elementwise, diag_elementwise };
enum class ServeMode { prefill, decode };
enum class Precision { f32, f64 };
enum class BenchScope { adapter, layer };

std::string_view to_string(Kernel k);
std::string_view to_string(ServeMode m);
std::string_view to_string(BenchScope s);
std::optional<Kernel> kernel_from_string(std::string_view s);

/// Counts the floating-point operations a kernel actually executes.
struct FlopCounter {
  std::uint64_t mul = 0;
  std::uint64_t add = 0;

  std::uint64_t total() const noexcept { return mul + add; }
};

/// X W0 for every token; the shared backbone product.
template <typename T>
Tensor3<T> base_product(const HeteroBatch<T>& batch, const DenseMatrix& w0);

/// Per request: Z_i = X_i W0 + (X_i B_i) (scaling A_i) over stacked B, A.
/// In decode mode tokens are processed as l sequential single-token steps.
template <typename T>
Tensor3<T> serve_lora_bmm(const AdapterRegistry& reg, const HeteroBatch<T>& batch,
                          const DenseMatrix& w0, ServeMode mode = ServeMode::prefill,
                          FlopCounter* adapter_flops = nullptr);

/// Every request must use the same LoRA adapter, merged into W0 ahead of time.
template <typename T>
Tensor3<T> serve_lora_merged_homogeneous(const AdapterRegistry& reg, const HeteroBatch<T>& batch,
                                         const DenseMatrix& w0, ServeMode mode = ServeMode::prefill);

/// Per request: z = v1_i * h + v2_i * swap(h) with h = x W0, any RoAd variants.
template <typename T>
Tensor3<T> serve_road_elementwise(const AdapterRegistry& reg, const HeteroBatch<T>& batch,
                                  const DenseMatrix& w0, ServeMode mode = ServeMode::prefill,
                                  FlopCounter* adapter_flops = nullptr);

template <typename T>
Tensor3<T> serve_diag_elementwise(const AdapterRegistry& reg, const HeteroBatch<T>& batch,
                                  const DenseMatrix& w0, ServeMode mode = ServeMode::prefill,
                                  FlopCounter* adapter_flops = nullptr);

/// Request-by-request, token-by-token reference built from lora_apply,
/// apply_dense_oracle and diag_scale_apply.
Tensor3<double> serve_sequential_oracle(const AdapterRegistry& reg,
                                        const HeteroBatch<double>& batch, const DenseMatrix& w0);

/// Closed-form adapter FLOPs for b requests of l tokens.
std::uint64_t lora_adapter_flops(std::size_t b, std::size_t l, std::size_t d1, std::size_t d2,
                                 std::size_t r);
std::uint64_t road_adapter_flops(std::size_t b, std::size_t l, std::size_t d2);
std::uint64_t diag_adapter_flops(std::size_t b, std::size_t l, std::size_t d2);

struct WorkloadSpec {
  std::vector<Kernel> kernels{Kernel::lora_bmm, Kernel::road_elementwise};
  std::vector<std::size_t> batch_sizes{8};
  std::vector<std::size_t> token_counts{2048};
  std::vector<std::size_t> ranks{8};
  std::size_t d1 = 1024;
  std::size_t d2 = 1024;
  RoadVariant road_variant = RoadVariant::Road1;
  ServeMode mode = ServeMode::decode;
  BenchScope scope = BenchScope::adapter;
  Precision precision = Precision::f32;
  std::uint64_t seed = 0;
};

struct BenchReport {
  Kernel kernel = Kernel::lora_bmm;
  ServeMode mode = ServeMode::decode;
  BenchScope scope = BenchScope::adapter;
  std::size_t b = 0, l = 0, d1 = 0, d2 = 0, r = 0;
  std::int64_t wall_ns = 0;  // median over repetitions
  std::uint64_t flops = 0;   // per repetition, counted by an instrumented pass
  double tokens_per_second = 0.0;
};

/// Smallest positive step observed on the monotonic clock, in nanoseconds.
std::int64_t timer_resolution_ns();

/// Times every kernel in `spec.kernels` at each (b, tokens, r) point. Kernels of one
/// point are interleaved step by step. Throws PreconditionError if
/// repetitions < 3 or warmup < 1 and MeasurementError when a median is below
/// 100 clock ticks.
std::vector<BenchReport> run_bench(const WorkloadSpec& spec, std::size_t repetitions,
                                   std::size_t warmup);

/// Random heterogeneous batch and registry used by tests and the bench.
struct ServingFixture {
  AdapterRegistry registry;
  DenseMatrix w0;
  std::vector<std::string> lora_ids, road_ids, diag_ids;
};

ServingFixture make_serving_fixture(std::size_t adapters, std::size_t d1, std::size_t d2,
                                    std::size_t r, std::uint64_t seed,
                                    RoadVariant variant = RoadVariant::Road1,
                                    bool mixed_road_variants = false);

template <typename T>
HeteroBatch<T> make_batch(std::size_t l, std::size_t d1, std::vector<std::string> ids,
                          std::uint64_t seed);

}  // namespace road

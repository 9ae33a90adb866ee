// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "road/baselines.hpp"
#include "road/numeric.hpp"
#include "road/road_adapter.hpp"

namespace road {

using AnyAdapter = std::variant<RoadAdapter, LoraAdapter, DiagScaleAdapter, CayleyBlockAdapter>;

enum class Nonlinearity { none, relu, tanh };
enum class Head { regression, logistic };

/// One frozen linear layer, optionally adapted. Output = act(adapter(W0^T x)).
struct ToyLayer {
  DenseMatrix w0;
  std::optional<AnyAdapter> adapter;
  Nonlinearity act = Nonlinearity::none;
  /// RoAd only: when set, just these blocks receive updates.
  std::optional<std::vector<std::size_t>> trainable_blocks;
};

struct ToyModel {
  std::vector<ToyLayer> layers;
  Head head = Head::regression;
  /// Regression only: per-output loss weights; empty means all ones.
  std::vector<double> output_weights;
};

struct Dataset {
  std::vector<DenseVector> inputs;
  std::vector<DenseVector> targets;

  std::size_t size() const noexcept { return inputs.size(); }
};

enum class Optimizer { sgd, adam };

struct TrainConfig {
  double lr = 1e-2;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Stop once the end-of-epoch loss falls below this value (0 disables).
  double stop_below = 0.0;
};

struct TrainTrace {
  std::vector<double> epoch_loss;
  std::vector<std::optional<AnyAdapter>> adapters;

  double final_loss() const { return epoch_loss.empty() ? 0.0 : epoch_loss.back(); }
};

std::string_view adapter_kind_name(const AnyAdapter& a);

/// Trainable parameters of every adapter, layer by layer. RoAd flattens as
/// theta then alpha, LoRA as B then A (row-major), diagonal as l, Cayley as q.
std::vector<double> flat_params(const ToyModel& m);
void assign_flat_params(ToyModel& m, std::span<const double> params);

DenseVector forward(const ToyModel& m, const DenseVector& x);
double loss(const ToyModel& m, const Dataset& data);

/// Mean loss over `rows` of `data` and its gradient with respect to flat_params(m).
double loss_and_grad(const ToyModel& m, const Dataset& data, std::span<const std::size_t> rows,
                     std::span<double> grad);

/// Updates only adapter parameters of `m` in place. Throws PreconditionError for
/// an invalid config or empty/misshaped data and DivergedError on a non-finite loss.
TrainTrace train(ToyModel& m, const Dataset& data, const TrainConfig& cfg);

/// Hidden-rotation regression task: targets are R* W0^T x for random blocks R*.
struct RecoveryTask {
  DenseMatrix w0;
  Dataset data;
  std::vector<double> theta_star;  // one angle per block, alpha* = 1
};

RecoveryTask make_recovery_task(std::size_t d2, std::uint64_t seed, std::size_t samples = 2000);

/// Angle represented by a (scaled) rotation block.
double block_angle(const Mat2& b);
/// Wraps an angle difference into (-pi, pi].
double wrap_angle(double a);

struct RecoveryResult {
  double final_loss = 0.0;
  std::vector<double> angle_error;  // per block, wrapped
  double max_block_error = 0.0;     // max |R_hat - R*| entry
  std::size_t epochs_run = 0;
  TrainTrace trace;
};

/// Trains a fresh RoAd adapter of `variant` on the task and compares it with R*.
RecoveryResult rotation_recovery_experiment(const RecoveryTask& task, RoadVariant variant,
                                            const TrainConfig& cfg);
RecoveryResult rotation_recovery_experiment(std::size_t d2, RoadVariant variant,
                                            std::uint64_t seed);

/// Default optimizer settings used by the recovery experiment.
TrainConfig recovery_config(std::uint64_t seed);

/// Trains a diagonal-scaling adapter on the same task; returns its final MSE.
double diag_recovery_baseline(const RecoveryTask& task, const TrainConfig& cfg);

enum class AdapterKind { road1, road2, road4, lora, diag, cayley };

std::string_view to_string(AdapterKind k);
std::optional<AdapterKind> adapter_kind_from_string(std::string_view s);

struct GradCheckEntry {
  AdapterKind kind;
  std::size_t size;
  double max_rel_error;
  bool passed;
};

/// Relative error used by the gradient checks: max_i |a_i - n_i| / max(|a|_inf, |n|_inf).
double normwise_rel_error(std::span<const double> analytic, std::span<const double> numeric);

/// Compares backprop gradients of a two-layer tanh toy model (both layers adapted
/// with `kind`) against central differences. Entries above `tolerance` fail.
std::vector<GradCheckEntry> gradient_check_suite(std::span<const AdapterKind> kinds,
                                                 std::span<const std::size_t> sizes,
                                                 std::uint64_t seed, double tolerance = 1e-4);

/// A randomly perturbed (non-identity) adapter of the given kind.
AnyAdapter random_adapter(AdapterKind kind, std::size_t d1, std::size_t d2, SeededRng& rng);

}  // namespace road

// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "road/error.hpp"
#include "road/trainer.hpp"
#include "support.hpp"

using namespace road;
using road::test::for_all;

namespace {

std::vector<std::size_t> all_rows(const Dataset& d) {
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

ToyModel single_layer(const DenseMatrix& w0, AnyAdapter a) {
  return ToyModel{{ToyLayer{w0, std::move(a), Nonlinearity::none, {}}}, Head::regression, {}};
}

// Mean squared error of the best per-dimension gain: l_j = sum h y / sum h^2.
double best_diagonal_mse(const RecoveryTask& task) {
  const std::size_t d2 = task.w0.cols(), n = task.data.size();
  std::vector<double> hy(d2, 0.0), hh(d2, 0.0);
  std::vector<std::vector<double>> hs;
  for (std::size_t k = 0; k < n; ++k) {
    hs.push_back(test::oracle_matvec_t(task.w0, task.data.inputs[k].span()));
    for (std::size_t j = 0; j < d2; ++j) {
      hy[j] += hs[k][j] * task.data.targets[k][j];
      hh[j] += hs[k][j] * hs[k][j];
    }
  }
  double sse = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < d2; ++j) {
      const double e = hy[j] / hh[j] * hs[k][j] - task.data.targets[k][j];
      sse += e * e;
    }
  return sse / static_cast<double>(n * d2);
}

}  // namespace

TEST_CASE("train rejects invalid configs and data") {
  SeededRng rng(1);
  ToyModel m = single_layer(DenseMatrix::identity(4), RoadAdapter::identity(RoadVariant::Road1, 4));
  Dataset data{{rng.uniform_vector(4, -1, 1)}, {rng.uniform_vector(4, -1, 1)}};
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(m, data, cfg), PreconditionError);
  cfg.epochs = 1;
  cfg.lr = 0.0;
  CHECK_THROWS_AS(train(m, data, cfg), PreconditionError);
  cfg.lr = 1e-2;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train(m, data, cfg), PreconditionError);
  cfg.batch_size = 1;
  CHECK_THROWS_AS(train(m, Dataset{}, cfg), PreconditionError);
  Dataset bad{{DenseVector(3)}, {DenseVector(4)}};
  CHECK_THROWS_AS(train(m, bad, cfg), DimensionError);
  CHECK_THROWS_AS(make_recovery_task(7, 0), PreconditionError);
  CHECK_THROWS_AS(make_recovery_task(258, 0), PreconditionError);
}

TEST_CASE("identity task starts optimal") {
  SeededRng rng(2);
  Dataset data;
  for (int n = 0; n < 50; ++n) {
    data.inputs.push_back(rng.uniform_vector(8, -1, 1));
    data.targets.push_back(data.inputs.back());
  }
  ToyModel m = single_layer(DenseMatrix::identity(8), RoadAdapter::identity(RoadVariant::Road1, 8));
  TrainConfig cfg;
  cfg.epochs = 5;
  const TrainTrace t = train(m, data, cfg);
  CHECK(t.final_loss() < 1e-6);
}

TEST_CASE("zero hidden rotation needs no training") {
  RecoveryTask task = make_recovery_task(16, 3, 200);
  for (std::size_t n = 0; n < task.data.size(); ++n)
    task.data.targets[n] = DenseVector(test::oracle_matvec_t(task.w0, task.data.inputs[n].span()));
  std::fill(task.theta_star.begin(), task.theta_star.end(), 0.0);
  const RecoveryResult r = rotation_recovery_experiment(task, RoadVariant::Road1, recovery_config(3));
  CHECK(r.final_loss < 1e-10);
  CHECK(r.epochs_run == 1);
}

TEST_CASE("hidden rotation is recovered and diagonal scaling cannot follow") {
  for (std::uint64_t seed : {0u, 1u}) {
    CAPTURE(seed);
    const RecoveryTask task = make_recovery_task(32, seed);
    for (double t : task.theta_star) {
      CHECK(t > -std::numbers::pi / 4);
      CHECK(t < std::numbers::pi / 4);
    }
    const RecoveryResult r = rotation_recovery_experiment(task, RoadVariant::Road1, recovery_config(seed));
    CHECK(r.final_loss < 1e-3);
    CHECK(r.epochs_run <= 500);
    CHECK(r.max_block_error < 1e-2);
    for (double e : r.angle_error) CHECK(e < 1e-2);

    const double diag = diag_recovery_baseline(task, recovery_config(seed));
    const double floor = best_diagonal_mse(task);
    CHECK(diag >= 10 * r.final_loss);
    CHECK(diag >= floor * (1 - 1e-9));
    CHECK(diag <= floor * 1.01);
  }
}

TEST_CASE("Road2 and Road4 also recover the rotation") {
  const RecoveryTask task = make_recovery_task(16, 5, 500);
  for (RoadVariant v : {RoadVariant::Road2, RoadVariant::Road4}) {
    CAPTURE(to_string(v));
    const RecoveryResult r = rotation_recovery_experiment(task, v, recovery_config(5));
    CHECK(r.final_loss < 1e-3);
    CHECK(r.max_block_error < 1e-2);
  }
}

TEST_CASE("RoAd tolerates a 10x larger learning rate than LoRA needs") {
  const RecoveryTask task = make_recovery_task(16, 6, 500);
  const double lr0 = 1e-3;
  SeededRng rng(6);
  ToyModel lora = single_layer(task.w0, LoraAdapter::init(16, 16, 4, rng));
  TrainConfig cfg = recovery_config(6);
  cfg.lr = lr0;
  cfg.epochs = 50;
  const TrainTrace lt = train(lora, task.data, cfg);
  CHECK(std::isfinite(lt.final_loss()));
  CHECK(lt.final_loss() < lt.epoch_loss.front());

  cfg.lr = 10 * lr0;
  cfg.epochs = 500;
  const RecoveryResult r = rotation_recovery_experiment(task, RoadVariant::Road1, cfg);
  CHECK(std::isfinite(r.final_loss));
  CHECK(r.final_loss < 1e-3);
}

TEST_CASE("training is deterministic and never touches W0") {
  const RecoveryTask task = make_recovery_task(8, 7, 100);
  TrainConfig cfg = recovery_config(7);
  cfg.epochs = 4;
  cfg.stop_below = 0;
  cfg.batch_size = 7;
  for (AdapterKind k : {AdapterKind::road2, AdapterKind::lora, AdapterKind::diag, AdapterKind::cayley}) {
    CAPTURE(to_string(k));
    SeededRng r1(8), r2(8);
    ToyModel a = single_layer(task.w0, random_adapter(k, 8, 8, r1));
    ToyModel b = single_layer(task.w0, random_adapter(k, 8, 8, r2));
    const TrainTrace ta = train(a, task.data, cfg);
    const TrainTrace tb = train(b, task.data, cfg);
    CHECK(ta.epoch_loss == tb.epoch_loss);
    CHECK(flat_params(a) == flat_params(b));
    CHECK(a.layers[0].w0 == task.w0);
  }
}

TEST_CASE("divergence is reported with its epoch") {
  const RecoveryTask task = make_recovery_task(4, 9, 20);
  ToyModel m = single_layer(task.w0, DiagScaleAdapter::identity(4));
  TrainConfig cfg;
  cfg.optimizer = Optimizer::sgd;
  cfg.lr = 1e300;
  cfg.epochs = 3;
  try {
    train(m, task.data, cfg);
    FAIL("expected DivergedError");
  } catch (const DivergedError& e) {
    CHECK(e.epoch() == 0);
  }
}

TEST_CASE("masked blocks stay frozen") {
  const RecoveryTask task = make_recovery_task(8, 10, 200);
  ToyModel m = single_layer(task.w0, RoadAdapter::identity(RoadVariant::Road2, 8));
  m.layers[0].trainable_blocks = std::vector<std::size_t>{1, 3};
  TrainConfig cfg = recovery_config(10);
  cfg.epochs = 5;
  train(m, task.data, cfg);
  const auto& a = std::get<RoadAdapter>(*m.layers[0].adapter);
  for (std::size_t blk = 0; blk < 4; ++blk) {
    for (std::size_t j = 2 * blk; j < 2 * blk + 2; ++j) {
      if (blk == 1 || blk == 3) {
        CHECK(a.theta()[j] != 0.0);
      } else {
        CHECK(a.theta()[j] == 0.0);
        CHECK(a.alpha()[j] == 1.0);
      }
    }
  }
}

TEST_CASE("model gradients match central differences for every head and activation") {
  for_all(30, 11, [](SeededRng& rng, std::size_t c) {
    const AdapterKind kinds[] = {AdapterKind::road1, AdapterKind::road2, AdapterKind::road4,
                                 AdapterKind::lora,  AdapterKind::diag,  AdapterKind::cayley};
    const AdapterKind kind = kinds[c % 6];
    const std::size_t d = test::gen_even(rng, 4);
    ToyModel m;
    m.layers.push_back({rng.uniform_matrix(d, d, -1, 1), random_adapter(kind, d, d, rng),
                        c % 2 ? Nonlinearity::relu : Nonlinearity::tanh, {}});
    m.layers.push_back({rng.uniform_matrix(d, 2, -1, 1), std::nullopt, Nonlinearity::none, {}});
    m.head = c % 3 == 0 ? Head::logistic : Head::regression;
    if (m.head == Head::regression && c % 4 == 1) m.output_weights = {0.25, 2.0};
    Dataset data;
    for (int n = 0; n < 4; ++n) {
      data.inputs.push_back(rng.uniform_vector(d, -1, 1));
      data.targets.push_back(m.head == Head::logistic ? DenseVector{static_cast<double>(n % 2)}
                                                      : rng.uniform_vector(2, -1, 1));
    }
    const std::vector<double> p = flat_params(m);
    std::vector<double> g(p.size());
    const double l = loss_and_grad(m, data, all_rows(data), g);
    CHECK(l == doctest::Approx(loss(m, data)).epsilon(1e-12));
    ToyModel probe = m;
    const auto f = [&](std::span<const double> q) {
      assign_flat_params(probe, q);
      return loss(probe, data);
    };
    CHECK(test::rel_error(g, test::central_diff(f, p, 1e-6)) <= 1e-5);
  });
}

TEST_CASE("gradient check suite") {
  const AdapterKind r1[] = {AdapterKind::road1};
  const AdapterKind r4[] = {AdapterKind::road4};
  const AdapterKind dg[] = {AdapterKind::diag};
  const std::size_t s8[] = {8};
  const std::size_t s64[] = {64};
  CHECK(gradient_check_suite(r1, s8, 1)[0].max_rel_error <= 1e-5);
  CHECK(gradient_check_suite(dg, s8, 1)[0].max_rel_error <= 1e-6);
  const auto big = gradient_check_suite(r4, s64, 1);
  CHECK(big[0].max_rel_error <= 1e-5);
  CHECK(big[0].passed);
  const std::size_t odd[] = {7};
  CHECK_THROWS_AS(gradient_check_suite(r1, odd, 1), PreconditionError);
  // A tolerance below the achievable error yields failing entries, not exceptions.
  CHECK_FALSE(gradient_check_suite(r1, s8, 1, 0.0)[0].passed);
}

TEST_CASE("adapter kind names round trip") {
  for (AdapterKind k : {AdapterKind::road1, AdapterKind::road2, AdapterKind::road4, AdapterKind::lora,
                        AdapterKind::diag, AdapterKind::cayley}) {
    CHECK(adapter_kind_from_string(to_string(k)) == k);
  }
  CHECK_FALSE(adapter_kind_from_string("oft").has_value());
  CHECK(wrap_angle(3 * std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
}

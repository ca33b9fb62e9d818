#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ncnes/experiment.hpp"
#include "ncnes/parallel.hpp"

using namespace ncnes;

namespace {

RunConfig small_config(std::uint64_t seed, double phi = 0.0001) {
  RunConfig cfg;
  cfg.lambda = 5;
  cfg.mu = 6;
  cfg.phi = phi;
  cfg.budget_evals = 5 * 6 * 8;  // eight iterations
  cfg.seed = seed;
  cfg.sense = Sense::minimize;
  cfg.init_box.assign(3, Bounds{-5.12, 5.12});
  return cfg;
}

ExecPlan plan_for(ExecMode mode, const RunConfig& cfg,
                  Exchange exchange = Exchange::blocking) {
  ExecPlan plan;
  plan.mode = mode;
  plan.exchange = exchange;
  plan.workers = mode == ExecMode::serial
                     ? 1
                     : (mode == ExecMode::island ? cfg.lambda
                                                 : cfg.lambda * cfg.mu);
  return plan;
}

}  // namespace

TEST_CASE("plan validation catches bad shapes") {
  const RunConfig cfg = small_config(1);

  ExecPlan island = plan_for(ExecMode::island, cfg);
  island.workers = 3;
  CHECK(!validate(island, cfg).empty());

  ExecPlan serial = plan_for(ExecMode::serial, cfg);
  serial.workers = 2;
  CHECK(!validate(serial, cfg).empty());
  serial.workers = 1;
  serial.exchange = Exchange::nonblocking;
  CHECK(!validate(serial, cfg).empty());

  ExecPlan hybrid = plan_for(ExecMode::hybrid, cfg);
  hybrid.workers = 0;
  CHECK(!validate(hybrid, cfg).empty());

  RunConfig auto_cfg = cfg;
  auto_cfg.auto_phi = true;
  ExecPlan nonblocking = plan_for(ExecMode::island, cfg, Exchange::nonblocking);
  CHECK(!validate(nonblocking, auto_cfg).empty());

  CHECK_THROWS_AS(
      execute(cfg, island, ObjectiveRegistry::global().make("sphere", 3)),
      std::invalid_argument);
}

TEST_CASE("serial, island-blocking and hybrid-blocking are byte-identical") {
  const Objective obj = ObjectiveRegistry::global().make("rastrigin", 3, 0.5);
  for (std::uint64_t seed : {11ULL, 12ULL}) {
    RunConfig cfg = small_config(seed);
    cfg.reevals_min = 1;
    cfg.reevals_max = 3;  // exercise stream-driven re-evaluation draws

    const auto serial = execute(cfg, plan_for(ExecMode::serial, cfg), obj);
    const auto island = execute(cfg, plan_for(ExecMode::island, cfg), obj);
    const auto hybrid = execute(cfg, plan_for(ExecMode::hybrid, cfg), obj);

    const std::string s = curve_to_csv(serial.first, cfg.lambda);
    CHECK(s == curve_to_csv(island.first, cfg.lambda));
    CHECK(s == curve_to_csv(hybrid.first, cfg.lambda));
    CHECK(serial.first.best_solution == island.first.best_solution);
    CHECK(serial.first.best_solution == hybrid.first.best_solution);
    CHECK(serial.first.best_fitness == island.first.best_fitness);
    CHECK(serial.first.evals_used == hybrid.first.evals_used);
  }
}

TEST_CASE("a small evaluation pool gives the same hybrid results") {
  const Objective obj = ObjectiveRegistry::global().make("sphere", 3, 0.0);
  const RunConfig cfg = small_config(21);
  ExecPlan pool3 = plan_for(ExecMode::hybrid, cfg);
  pool3.workers = 3;
  const auto serial = execute(cfg, plan_for(ExecMode::serial, cfg), obj);
  const auto hybrid = execute(cfg, pool3, obj);
  CHECK(curve_to_csv(serial.first, cfg.lambda) ==
        curve_to_csv(hybrid.first, cfg.lambda));
}

TEST_CASE("nonblocking equals blocking when phi = 0") {
  const Objective obj = ObjectiveRegistry::global().make("rastrigin", 3, 0.0);
  RunConfig cfg = small_config(31, /*phi=*/0.0);
  const auto blocking =
      execute(cfg, plan_for(ExecMode::island, cfg, Exchange::blocking), obj);
  const auto nonblocking = execute(
      cfg, plan_for(ExecMode::island, cfg, Exchange::nonblocking), obj);
  CHECK(curve_to_csv(blocking.first, cfg.lambda) ==
        curve_to_csv(nonblocking.first, cfg.lambda));
  CHECK(blocking.first.best_solution == nonblocking.first.best_solution);
}

TEST_CASE("nonblocking with phi > 0 stays structurally sound") {
  const Objective obj = ObjectiveRegistry::global().make("rastrigin", 3, 0.0);
  RunConfig cfg = small_config(41, /*phi=*/0.01);
  const auto blocking =
      execute(cfg, plan_for(ExecMode::island, cfg, Exchange::blocking), obj);
  const auto nonblocking = execute(
      cfg, plan_for(ExecMode::island, cfg, Exchange::nonblocking), obj);
  const RunReport& report = nonblocking.first;
  REQUIRE(report.valid);
  CHECK(report.iterations == blocking.first.iterations);
  CHECK(report.evals_used == blocking.first.evals_used);
  for (std::size_t i = 1; i < report.curve.size(); ++i) {
    CHECK(report.curve[i].best_fitness <= report.curve[i - 1].best_fitness);
  }
  // The deviation introduced by stale snapshots is measured, not asserted.
  const double dev = std::abs(report.curve.back().mean_pairwise_db -
                              blocking.first.curve.back().mean_pairwise_db);
  CHECK(std::isfinite(dev));
  MESSAGE("nonblocking diversity deviation after ",
          report.iterations, " iterations: ", dev);
}

TEST_CASE("speedup ratio arithmetic") {
  CHECK(speedup_ratio(100.0, 20.0, 5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(speedup_ratio(122.6, 31.2, 5) ==
        doctest::Approx(0.786).epsilon(2e-3));
  CHECK(speedup_ratio(116.0, 19.48, 75) ==
        doctest::Approx(0.079).epsilon(1e-2));
  CHECK_THROWS_AS(speedup_ratio(0.0, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(speedup_ratio(1.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("worker failures name the offending process and sample") {
  RunConfig cfg = small_config(51);
  Objective obj = ObjectiveRegistry::global().make("sphere", 3, 0.0);
  obj.analytic = [](std::span<const double>) -> double {
    throw std::runtime_error("instrument failure");
  };
  for (ExecMode mode : {ExecMode::serial, ExecMode::island, ExecMode::hybrid}) {
    const auto [report, timing] = execute(cfg, plan_for(mode, cfg), obj);
    CHECK(!report.valid);
    CHECK(report.error.find("process 1, sample 1") != std::string::npos);
    CHECK(report.error.find("instrument failure") != std::string::npos);
    CHECK(report.iterations == 0);
  }
}

TEST_CASE("timing reports carry worker iteration durations") {
  const Objective obj = ObjectiveRegistry::global().make("sphere", 3, 0.0);
  RunConfig cfg = small_config(61);
  cfg.budget_evals = 5 * 6 * 2;  // two iterations
  ExecPlan plan = plan_for(ExecMode::island, cfg);
  plan.slow_eval_ms = 2.0;
  const auto [report, timing] = execute(cfg, plan, obj);
  CHECK(report.valid);
  CHECK(timing.iterations == 2);
  // 6 evaluations x 2 ms each, so no worker iteration can beat 12 ms.
  CHECK(timing.mean_worker_iteration_s >= 0.012);
  CHECK(timing.wall_clock_s >= timing.mean_worker_iteration_s);
  CHECK(std::isnan(timing.speedup_ratio));
}

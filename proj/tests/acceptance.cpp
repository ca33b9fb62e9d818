// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit status is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ncnes/experiment.hpp"
#include "ncnes/ncs.hpp"
#include "ncnes/parallel.hpp"
#include "oracles.hpp"

using namespace ncnes;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(int number, const std::string& label,
            const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    outcome = body();
  } catch (const std::exception& e) {
    outcome.pass = false;
    outcome.detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::printf("[%s] criterion %2d: %s — %s (%.2f s)\n",
              outcome.pass ? "PASS" : "FAIL", number, label.c_str(),
              outcome.detail.c_str(), secs);
  std::fflush(stdout);
  if (!outcome.pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// --- criterion 1: diversity gradient vs finite differences ---------------

Outcome diversity_gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  rng::Stream s(2001, rng::Domain::test, 1);
  const int dims[] = {1, 2, 5};
  const int lambdas[] = {2, 3, 5};
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = dims[trial % 3];
    const int lambda = lambdas[(trial / 3) % 3];
    std::vector<SearchDistribution> dists;
    for (int j = 0; j < lambda; ++j) {
      dists.push_back(oracle::random_distribution(s, dim));
    }
    const std::size_t i =
        static_cast<std::size_t>(s.uniform_int(0, lambda - 1));
    const GradientPair g = diversity_grad(i, dists);

    double err_m = 0.0, abs_m = 0.0, err_v = 0.0, abs_v = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double hm = 1e-5 * std::max(1.0, std::abs(dists[i].mean[d]));
      const double fd_m = oracle::central_difference(
          [&](double value) {
            auto copy = dists;
            copy[i].mean[d] = value;
            return diversity_value(i, copy);
          },
          dists[i].mean[d], hm);
      err_m = std::max(err_m, std::abs(fd_m - g.wrt_mean[d]));
      abs_m = std::max(abs_m, std::abs(fd_m));

      const double hv = 1e-5 * std::abs(dists[i].variance[d]);
      const double fd_v = oracle::central_difference(
          [&](double value) {
            auto copy = dists;
            copy[i].variance[d] = value;
            return diversity_value(i, copy);
          },
          dists[i].variance[d], hv);
      err_v = std::max(err_v, std::abs(fd_v - g.wrt_variance[d]));
      abs_v = std::max(abs_v, std::abs(fd_v));
    }
    worst = std::max(worst, err_m / std::max(abs_m, 1e-8));
    worst = std::max(worst, err_v / std::max(abs_v, 1e-8));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  Outcome out;
  out.pass = worst < 1e-5 && secs < 10.0;
  out.detail = "worst relative error " + fmt(worst) + " over 100 configs";
  return out;
}

// --- criterion 2: Bhattacharyya closed form vs integration ---------------

Outcome bhattacharyya_oracle_check() {
  const auto t0 = std::chrono::steady_clock::now();
  rng::Stream s(2002, rng::Domain::test, 2);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = trial % 2 == 0 ? 1 : 2;
    const auto a = oracle::random_distribution(s, dim);
    const auto b = oracle::random_distribution(s, dim);
    const double closed = bhattacharyya(a, b);
    const double integrated = oracle::bhattacharyya_by_integration(a, b);
    const double rel = std::abs(closed - integrated) /
                       std::max({std::abs(closed), std::abs(integrated), 1e-9});
    worst = std::max(worst, rel);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  Outcome out;
  out.pass = worst < 1e-6 && secs < 30.0;
  out.detail = "worst relative error " + fmt(worst) + " over 200 pairs";
  return out;
}

// --- criterion 3: Fisher consistency at mu = 1e6 --------------------------

Outcome fisher_consistency_check() {
  const auto t0 = std::chrono::steady_clock::now();
  rng::Stream s(2003, rng::Domain::test, 3);
  const std::size_t mu = 1000000;
  double worst_m = 0.0;
  double worst_v = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const int dim = 3;
    const SearchDistribution dist = oracle::random_distribution(s, dim);
    SampleBatch batch;
    batch.solutions =
        sample(dist, mu,
               rng::Stream(3000 + trial, rng::Domain::test,
                           static_cast<std::uint64_t>(trial)));
    batch.fitnesses.assign(mu, 0.0);
    const FisherDiagonals f = fisher(dist, batch);
    for (int d = 0; d < dim; ++d) {
      const double v = dist.variance[d];
      worst_m = std::max(worst_m, std::abs(f.for_mean[d] * v - 1.0));
      worst_v =
          std::max(worst_v, std::abs(f.for_variance[d] * 2.0 * v * v - 1.0));
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  Outcome out;
  out.pass = worst_m < 0.01 && worst_v < 0.02 && secs < 60.0;
  out.detail = "F_m off by " + fmt(worst_m * 100) + "%, F_v off by " +
               fmt(worst_v * 100) + "% (5 distributions)";
  return out;
}

// --- criterion 4: utility contract ----------------------------------------

Outcome utility_contract_check() {
  rng::Stream s(2004, rng::Domain::test, 4);
  double worst_sum = 0.0;
  bool invariant = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const int mu = 1 + static_cast<int>(s.uniform_int(0, 49));
    std::vector<double> fitnesses(mu);
    for (double& f : fitnesses) f = s.uniform(-1000.0, 1000.0);
    const Utilities u = shape_utilities(fitnesses, Sense::maximize);
    double sum = 0.0;
    for (double v : u.values) sum += v;
    worst_sum = std::max(worst_sum, std::abs(sum));

    std::vector<double> transformed(fitnesses);
    for (double& f : transformed) {
      f = std::exp(f / 2000.0) + 0.5 * f;  // strictly monotone
    }
    const Utilities t = shape_utilities(transformed, Sense::maximize);
    if (t.values != u.values) invariant = false;
  }
  Outcome out;
  out.pass = worst_sum < 1e-12 && invariant;
  out.detail = "worst |sum| " + fmt(worst_sum) + ", rank invariance " +
               (invariant ? "holds" : "broken") + " over 1000 batches";
  return out;
}

// --- criterion 5: separable-NES degeneration, bit for bit ----------------

Outcome nes_degeneration_check() {
  const int dim = 3;
  const int mu = 15;
  const int iters = 100;

  RunConfig cfg;
  cfg.lambda = 1;
  cfg.mu = mu;
  cfg.phi = 0.0;
  cfg.seed = 777;
  cfg.sense = Sense::minimize;
  cfg.budget_evals = static_cast<long long>(iters) * mu;
  cfg.init_box.assign(dim, Bounds{-5.12, 5.12});
  const Objective obj = ObjectiveRegistry::global().make("sphere", dim, 0.0);
  OptimizerState state = init_state(cfg, obj);

  std::vector<double> mean(dim);
  std::vector<double> variance(dim);
  {
    rng::Stream s(cfg.seed, rng::Domain::init_mean, 0);
    for (int d = 0; d < dim; ++d) {
      mean[d] = s.uniform(-5.12, 5.12);
      variance[d] = std::max(kVarFloor, 2.56 * 2.56);
    }
  }

  long long evals = 0;
  long long mismatches = 0;
  for (int g = 0; g < iters; ++g) {
    if (!iterate(state)) return {false, "optimizer stopped early"};

    const double decay = std::max(
        0.0, (std::numbers::e -
              std::exp(static_cast<double>(evals) / cfg.budget_evals)) /
                 (std::numbers::e - 1.0));
    const double eta_m = cfg.eta_m_init * decay;
    const double eta_v = cfg.eta_v_init * decay;

    rng::Stream s(cfg.seed, rng::Domain::sample, 0,
                  static_cast<std::uint64_t>(g));
    std::vector<std::vector<double>> xs(mu, std::vector<double>(dim));
    std::vector<double> fs(mu);
    for (int k = 0; k < mu; ++k) {
      for (int d = 0; d < dim; ++d) {
        xs[k][d] = mean[d] + std::sqrt(variance[d]) * s.normal();
      }
      fs[k] = sphere_value(xs[k]);
    }

    std::vector<std::size_t> order(mu);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return fs[a] < fs[b];
    });
    const double log_half = std::log(0.5 * mu + 1.0);
    std::vector<double> raw(mu);
    double denom = 0.0;
    for (int r = 0; r < mu; ++r) {
      raw[r] = std::max(0.0, log_half - std::log(static_cast<double>(r + 1)));
      denom += raw[r];
    }
    std::vector<double> u(mu);
    for (int r = 0; r < mu; ++r) u[order[r]] = raw[r] / denom - 1.0 / mu;

    for (int d = 0; d < dim; ++d) {
      double gm = 0.0, gv = 0.0, fm = 0.0, fv = 0.0;
      for (int k = 0; k < mu; ++k) {
        const double diff = xs[k][d] - mean[d];
        const double v = variance[d];
        gm += diff / v * u[k];
        gv += (diff * diff / (2.0 * v * v) - 1.0 / (2.0 * v)) * u[k];
        const double q = diff * diff / (v * v);
        fm += q;
        const double rr = q - 1.0 / v;
        fv += rr * rr;
      }
      const double inv_mu = 1.0 / static_cast<double>(mu);
      gm *= inv_mu;
      gv *= inv_mu;
      fm = std::max(kFisherFloor, fm * inv_mu);
      fv = std::max(kFisherFloor, fv * inv_mu * 0.25);
      mean[d] = mean[d] + eta_m * (gm / fm);
      variance[d] = std::max(kVarFloor, variance[d] + eta_v * (gv / fv));
    }
    evals += mu;

    for (int d = 0; d < dim; ++d) {
      if (state.dists[0].mean[d] != mean[d] ||
          state.dists[0].variance[d] != variance[d]) {
        ++mismatches;
      }
    }
  }
  Outcome out;
  out.pass = mismatches == 0;
  out.detail = mismatches == 0
                   ? "100 iterations bit-identical to the reference"
                   : std::to_string(mismatches) + " coordinate mismatches";
  return out;
}

// --- criterion 6: diversity ablation through the experiment driver -------

Outcome diversity_ablation_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path base = fs::temp_directory_path() / "ncnes_acceptance_ablation";
  fs::remove_all(base);

  const char* config_template = R"(
[objective]
id = rastrigin
dimension = 10

[run]
budget_evals = 3750
phi = %s

[experiment]
seeds = 1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20
)";

  auto run_with_phi = [&](const char* phi, const fs::path& dir) {
    char text[1024];
    std::snprintf(text, sizeof(text), config_template, phi);
    ConfigOverrides overrides;
    overrides.quiet = true;
    overrides.out_dir = dir.string();
    const ParseResult parsed = parse_config_text(text, overrides);
    if (!parsed.ok()) {
      throw std::runtime_error("ablation config failed: " +
                               parsed.errors.front());
    }
    if (run_experiment(*parsed.config) != 0) {
      throw std::runtime_error("ablation run failed");
    }
  };

  run_with_phi("0.0001", base / "with_phi");
  run_with_phi("0", base / "no_phi");

  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto with_phi = read_curve_csv_file(
        (base / "with_phi" / curve_filename(seed)).string());
    const auto no_phi =
        read_curve_csv_file((base / "no_phi" / curve_filename(seed)).string());
    if (with_phi.size() != 50 || no_phi.size() != 50) {
      return {false, "expected exactly 50 iterations per run"};
    }
    if (with_phi.back().mean_pairwise_db > no_phi.back().mean_pairwise_db) {
      ++wins;
    }
  }
  fs::remove_all(base);

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  Outcome out;
  out.pass = wins >= 18 && secs < 300.0;
  out.detail = "phi=1e-4 run more diverse after 50 iterations in " +
               std::to_string(wins) + "/20 paired seeds";
  return out;
}

// --- criterion 7: parallel determinism ------------------------------------

Outcome parallel_determinism_check() {
  struct Case {
    int lambda;
    int mu;
    double phi;
    int reevals_max;
    std::string objective;
    double noise;
  };
  const Case cases[] = {
      {5, 6, 0.0001, 1, "rastrigin", 0.0},
      {3, 8, 0.01, 3, "sphere", 0.5},
      {4, 5, 0.0, 2, "griewank", 0.25},
  };
  int identical = 0;
  for (const Case& c : cases) {
    RunConfig cfg;
    cfg.lambda = c.lambda;
    cfg.mu = c.mu;
    cfg.phi = c.phi;
    cfg.reevals_max = c.reevals_max;
    cfg.budget_evals = static_cast<long long>(c.lambda) * c.mu * 12;
    cfg.seed = 90 + identical;
    cfg.sense = Sense::minimize;
    cfg.init_box.assign(4, Bounds{-5.12, 5.12});
    const Objective obj =
        ObjectiveRegistry::global().make(c.objective, 4, c.noise);

    ExecPlan serial;
    ExecPlan island{ExecMode::island, c.lambda, Exchange::blocking};
    ExecPlan hybrid{ExecMode::hybrid, c.lambda * c.mu, Exchange::blocking};

    const RunReport rs = execute(cfg, serial, obj).first;
    const RunReport ri = execute(cfg, island, obj).first;
    const RunReport rh = execute(cfg, hybrid, obj).first;

    const std::string bytes_s = curve_to_csv(rs, c.lambda);
    if (bytes_s == curve_to_csv(ri, c.lambda) &&
        bytes_s == curve_to_csv(rh, c.lambda) &&
        rs.best_solution == ri.best_solution &&
        rs.best_solution == rh.best_solution &&
        rs.best_fitness == ri.best_fitness &&
        rs.best_fitness == rh.best_fitness) {
      ++identical;
    }
  }
  Outcome out;
  out.pass = identical == 3;
  out.detail = std::to_string(identical) +
               "/3 configs byte-identical across serial/island/hybrid";
  return out;
}

// --- criterion 8: measured speedup and straggler behaviour ----------------

Outcome speedup_check() {
  RunConfig cfg;
  cfg.lambda = 5;
  cfg.mu = 6;
  cfg.phi = 0.0001;
  cfg.budget_evals = 5 * 6 * 3;  // three iterations
  cfg.seed = 404;
  cfg.sense = Sense::minimize;
  cfg.init_box.assign(3, Bounds{-5.12, 5.12});
  const Objective obj = ObjectiveRegistry::global().make("sphere", 3, 0.0);

  ExecPlan serial;
  serial.slow_eval_ms = 50.0;
  ExecPlan island{ExecMode::island, cfg.lambda, Exchange::blocking};
  island.slow_eval_ms = 50.0;

  const auto serial_run = execute(cfg, serial, obj);
  const auto island_run = execute(cfg, island, obj);
  const double ratio = speedup_ratio(serial_run.second.wall_clock_s,
                                     island_run.second.wall_clock_s,
                                     cfg.lambda);

  // Straggler: process 0 is five times slower; nonblocking workers should
  // not inherit its per-iteration wall-clock.
  ExecPlan block_straggler = island;
  block_straggler.straggler_index = 0;
  block_straggler.straggler_factor = 5.0;
  ExecPlan nonblock_straggler = block_straggler;
  nonblock_straggler.exchange = Exchange::nonblocking;

  const auto blocked = execute(cfg, block_straggler, obj);
  const auto nonblocked = execute(cfg, nonblock_straggler, obj);
  const double blocked_iter = blocked.second.mean_worker_iteration_s;
  const double nonblocked_iter = nonblocked.second.mean_worker_iteration_s;

  Outcome out;
  out.pass = ratio >= 0.5 && nonblocked_iter < blocked_iter;
  out.detail = "island speedup ratio " + fmt(ratio) + " (" +
               std::to_string(std::thread::hardware_concurrency()) +
               " hw threads); straggler per-iteration wall-clock " +
               fmt(nonblocked_iter) + " s nonblocking vs " + fmt(blocked_iter) +
               " s blocking";
  return out;
}

// --- criterion 9: speedup-ratio arithmetic on reference runtimes ----------------------

Outcome speedup_arithmetic_check() {
  const double island = speedup_ratio(122.6, 31.2, 5);
  const double hybrid = speedup_ratio(116.0, 19.48, 75);
  const bool island_ok =
      std::abs(island - 0.786) < 5e-4 && island >= 0.77 && island <= 0.79;
  const bool hybrid_ok =
      std::abs(hybrid - 0.079) < 5e-4 && hybrid >= 0.06 && hybrid <= 0.12;
  Outcome out;
  out.pass = island_ok && hybrid_ok;
  out.detail = "(122.6 h, 31.2 h, m=5) -> " + fmt(island) +
               "; (116.0 h, 19.48 h, m=75) -> " + fmt(hybrid);
  return out;
}

// --- criterion 10: optimization sanity + baseline structure ---------------

Outcome optimization_sanity_check() {
  auto& registry = ObjectiveRegistry::global();
  if (!registry.contains("neg-sphere")) {
    registry.add("neg-sphere", [](int dim, double sd) {
      Objective obj;
      obj.spec.id = "neg-sphere";
      obj.spec.dimension = dim;
      obj.spec.sense = Sense::maximize;
      obj.spec.noise_sd = sd;
      obj.spec.domain_box.assign(dim, Bounds{-5.12, 5.12});
      obj.spec.known_optimum = {std::vector<double>(dim, 0.0), 0.0};
      obj.analytic = [](std::span<const double> x) {
        return -sphere_value(x);
      };
      return obj;
    });
  }
  const Objective neg_sphere = registry.make("neg-sphere", 2, 0.0);

  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RunConfig cfg;
    cfg.budget_evals = 30000;
    cfg.seed = seed;
    cfg.sense = Sense::maximize;
    cfg.init_box.assign(2, Bounds{-5.12, 5.12});
    const RunReport report = run(cfg, neg_sphere);
    if (report.valid && report.best_fitness > -1e-2) ++hits;
  }

  // NCS-C on the same budget: completes and satisfies the structural
  // invariants of its report.
  RunConfig ncs_cfg;
  ncs_cfg.budget_evals = 30000;
  ncs_cfg.seed = 1;
  ncs_cfg.sense = Sense::maximize;
  ncs_cfg.init_box.assign(2, Bounds{-5.12, 5.12});
  ncs_cfg.ncs_sigma_init = 1.0;
  const RunReport ncs = run_ncs_c(ncs_cfg, neg_sphere);
  bool ncs_ok = ncs.valid && ncs.evals_used <= ncs_cfg.budget_evals &&
                ncs.iterations == static_cast<long long>(ncs.curve.size()) &&
                !ncs.curve.empty();
  for (std::size_t i = 0; ncs_ok && i < ncs.curve.size(); ++i) {
    if (i > 0 &&
        ncs.curve[i].best_fitness < ncs.curve[i - 1].best_fitness) {
      ncs_ok = false;
    }
    if (ncs.curve[i].process_mean_fitness.size() !=
        static_cast<std::size_t>(ncs_cfg.lambda)) {
      ncs_ok = false;
    }
    if (ncs.curve[i].evals > ncs_cfg.budget_evals) ncs_ok = false;
  }

  // Tracked benchmark (not a gate): NCNES vs NCS-C medians on 10-D
  // Rastrigin at an equal budget.
  std::vector<double> ncnes_best;
  std::vector<double> ncsc_best;
  const Objective rastrigin = registry.make("rastrigin", 10, 0.0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RunConfig cfg;
    cfg.budget_evals = 15000;
    cfg.seed = seed;
    cfg.sense = Sense::minimize;
    cfg.init_box.assign(10, Bounds{-5.12, 5.12});
    ncnes_best.push_back(run(cfg, rastrigin).best_fitness);
    ncsc_best.push_back(run_ncs_c(cfg, rastrigin).best_fitness);
  }
  std::printf("       tracked benchmark: 10-D rastrigin medians over 20 "
              "seeds at 15000 evals: ncnes %.4f vs ncs-c %.4f\n",
              median(ncnes_best), median(ncsc_best));

  Outcome out;
  out.pass = hits >= 18 && ncs_ok;
  out.detail = "2-D sphere reached > -1e-2 in " + std::to_string(hits) +
               "/20 seeds; ncs-c structural invariants " +
               (ncs_ok ? "hold" : "violated");
  return out;
}

}  // namespace

int main() {
  std::printf("acceptance suite (%u hardware threads)\n",
              std::thread::hardware_concurrency());
  report(1, "diversity gradient matches finite differences",
         diversity_gradient_check);
  report(2, "Bhattacharyya closed form matches integration",
         bhattacharyya_oracle_check);
  report(3, "sampled Fisher diagonals are consistent",
         fisher_consistency_check);
  report(4, "utilities sum to zero and depend only on ranks",
         utility_contract_check);
  report(5, "lambda=1, phi=0 degenerates to separable NES",
         nes_degeneration_check);
  report(6, "diversity ablation on 10-D rastrigin",
         diversity_ablation_check);
  report(7, "serial/island/hybrid blocking runs are byte-identical",
         parallel_determinism_check);
  report(8, "island speedup and straggler behaviour", speedup_check);
  report(9, "speedup-ratio arithmetic on reference runtimes", speedup_arithmetic_check);
  report(10, "optimization sanity and baseline structure",
         optimization_sanity_check);

  if (g_failures == 0) {
    std::printf("all criteria passed\n");
  } else {
    std::printf("%d criterion(s) failed\n", g_failures);
  }
  return g_failures;
}

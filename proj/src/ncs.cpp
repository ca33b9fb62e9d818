#include "ncnes/ncs.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ncnes {

namespace {

constexpr int kSigmaEpoch = 10;
constexpr double kSigmaFactor = 1.1;
const double kSigmaFloor = std::sqrt(kVarFloor);

bool better(double candidate, double incumbent, Sense sense) {
  return sense == Sense::maximize ? candidate > incumbent
                                  : candidate < incumbent;
}

}  // namespace

SearchDistribution to_distribution(const NcsProcess& proc) {
  if (!(proc.sigma > 0.0)) {
    throw std::invalid_argument("NcsProcess: sigma must be > 0");
  }
  SearchDistribution dist;
  dist.mean = proc.parent;
  dist.variance.assign(proc.parent.size(),
                       std::max(kVarFloor, proc.sigma * proc.sigma));
  return dist;
}

double decentralized_diversity(std::size_t i,
                               std::span<const NcsProcess> procs) {
  if (i >= procs.size()) {
    throw std::invalid_argument(
        "decentralized_diversity: process index out of range");
  }
  const SearchDistribution self = to_distribution(procs[i]);
  double min_db = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < procs.size(); ++j) {
    if (j == i) continue;
    min_db = std::min(min_db, bhattacharyya(self, to_distribution(procs[j])));
  }
  return min_db;
}

namespace {

double min_distance_to(const NcsProcess& proc,
                       std::span<const NcsProcess> peers) {
  const SearchDistribution self = to_distribution(proc);
  double min_db = std::numeric_limits<double>::infinity();
  for (const NcsProcess& peer : peers) {
    min_db = std::min(min_db, bhattacharyya(self, to_distribution(peer)));
  }
  return min_db;
}

bool offspring_wins(const NcsProcess& parent, const NcsProcess& offspring,
                    std::span<const NcsProcess> peers, double phi,
                    Sense sense) {
  const double d_parent = min_distance_to(parent, peers);
  const double d_offspring = min_distance_to(offspring, peers);

  // No peers: both diversities are unbounded and selection reduces to the
  // plain fitness comparison (ties keep the parent).
  if (std::isinf(d_parent) && std::isinf(d_offspring)) {
    return better(offspring.parent_fitness, parent.parent_fitness, sense);
  }

  const double sign = sense == Sense::maximize ? 1.0 : -1.0;
  const double parent_score = sign * parent.parent_fitness + phi * d_parent;
  const double offspring_score =
      sign * offspring.parent_fitness + phi * d_offspring;
  return parent_score < offspring_score;
}

}  // namespace

NcsProcess heuristic_select(const NcsProcess& parent,
                            const NcsProcess& offspring,
                            std::span<const NcsProcess> peers, double phi,
                            Sense sense) {
  return offspring_wins(parent, offspring, peers, phi, sense) ? offspring
                                                              : parent;
}

std::vector<bool> selection_sweep(std::vector<NcsProcess>& procs,
                                  std::span<const NcsProcess> offspring,
                                  double phi, Sense sense) {
  if (procs.size() != offspring.size()) {
    throw std::invalid_argument("selection_sweep: size mismatch");
  }
  std::vector<bool> accepted(procs.size(), false);
  std::vector<NcsProcess> peers;
  if (!procs.empty()) peers.reserve(procs.size() - 1);
  for (std::size_t i = 0; i < procs.size(); ++i) {
    peers.clear();
    for (std::size_t j = 0; j < procs.size(); ++j) {
      if (j != i) peers.push_back(procs[j]);
    }
    if (offspring_wins(procs[i], offspring[i], peers, phi, sense)) {
      accepted[i] = true;
      procs[i] = offspring[i];
    }
  }
  return accepted;
}

RunReport run_ncs_c(const RunConfig& cfg, const Objective& obj) {
  const auto start = std::chrono::steady_clock::now();
  {
    auto errors = validate(cfg, &obj.spec);
    if (!errors.empty()) {
      std::string joined = "invalid RunConfig:";
      for (const auto& e : errors) joined += " [" + e + "]";
      throw std::invalid_argument(joined);
    }
  }

  const int dim = cfg.dim();
  const SampleEvaluator evaluate = direct_evaluator(cfg, obj);

  RunReport report;
  report.phi_used = cfg.phi;

  std::vector<NcsProcess> procs(static_cast<std::size_t>(cfg.lambda));
  bool has_best = false;

  auto consider_best = [&](std::span<const double> x, double f) {
    if (!has_best || better(f, report.best_fitness, cfg.sense)) {
      has_best = true;
      report.best_fitness = f;
      report.best_solution.assign(x.begin(), x.end());
    }
  };

  auto mean_pairwise = [&procs] {
    std::vector<SearchDistribution> dists;
    dists.reserve(procs.size());
    for (const NcsProcess& p : procs) dists.push_back(to_distribution(p));
    return mean_pairwise_distance(dists);
  };

  try {
    // Initial parents; their evaluations count toward the budget.
    long long init_cost = 0;
    for (int i = 0; i < cfg.lambda; ++i) init_cost += reevals_for(cfg, i, 0, 0);
    if (init_cost > cfg.budget_evals) {
      report.wall_clock_s = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - start)
                                .count();
      return report;
    }
    for (int i = 0; i < cfg.lambda; ++i) {
      rng::Stream stream(cfg.seed, rng::Domain::init_mean,
                         static_cast<std::uint64_t>(i));
      NcsProcess& proc = procs[static_cast<std::size_t>(i)];
      proc.parent.resize(dim);
      for (int d = 0; d < dim; ++d) {
        const Bounds& b = cfg.init_box[static_cast<std::size_t>(d)];
        proc.parent[d] = stream.uniform(b.lower, b.upper);
      }
      proc.sigma = cfg.ncs_sigma_init;
      const EvalOutcome outcome = evaluate(proc.parent, i, 0, 0);
      proc.parent_fitness = outcome.fitness;
      report.evals_used += outcome.evals;
      consider_best(proc.parent, proc.parent_fitness);
    }

    std::vector<int> successes(static_cast<std::size_t>(cfg.lambda), 0);
    std::vector<NcsProcess> offspring(static_cast<std::size_t>(cfg.lambda));

    for (long long iter = 1;; ++iter) {
      long long cost = 0;
      for (int i = 0; i < cfg.lambda; ++i) cost += reevals_for(cfg, i, iter, 0);
      if (report.evals_used + cost > cfg.budget_evals) break;

      for (int i = 0; i < cfg.lambda; ++i) {
        const NcsProcess& parent = procs[static_cast<std::size_t>(i)];
        NcsProcess& child = offspring[static_cast<std::size_t>(i)];
        rng::Stream stream(cfg.seed, rng::Domain::mutation,
                           static_cast<std::uint64_t>(i),
                           static_cast<std::uint64_t>(iter));
        child.parent.resize(dim);
        for (int d = 0; d < dim; ++d) {
          child.parent[d] = parent.parent[d] + parent.sigma * stream.normal();
        }
        child.sigma = parent.sigma;
        const EvalOutcome outcome = evaluate(child.parent, i, iter, 0);
        child.parent_fitness = outcome.fitness;
        report.evals_used += outcome.evals;
        consider_best(child.parent, child.parent_fitness);
      }

      const std::vector<bool> accepted =
          selection_sweep(procs, offspring, cfg.phi, cfg.sense);

      for (int i = 0; i < cfg.lambda; ++i) {
        if (accepted[static_cast<std::size_t>(i)]) {
          successes[static_cast<std::size_t>(i)] += 1;
        }
      }
      if (iter % kSigmaEpoch == 0) {
        for (int i = 0; i < cfg.lambda; ++i) {
          NcsProcess& proc = procs[static_cast<std::size_t>(i)];
          const int wins = successes[static_cast<std::size_t>(i)];
          if (wins * 5 > kSigmaEpoch) {
            proc.sigma *= kSigmaFactor;
          } else if (wins * 5 < kSigmaEpoch) {
            proc.sigma /= kSigmaFactor;
          }
          proc.sigma = std::max(kSigmaFloor, proc.sigma);
          successes[static_cast<std::size_t>(i)] = 0;
        }
      }

      CurvePoint point;
      point.iteration = report.iterations + 1;
      point.evals = report.evals_used;
      point.best_fitness = report.best_fitness;
      point.mean_pairwise_db = mean_pairwise();
      for (const NcsProcess& proc : procs) {
        point.process_mean_fitness.push_back(proc.parent_fitness);
      }
      report.curve.push_back(std::move(point));
      report.iterations += 1;
    }
  } catch (const EvaluationError& e) {
    report.valid = false;
    report.error = e.what();
  }

  report.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

}  // namespace ncnes

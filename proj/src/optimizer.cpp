#include "ncnes/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace ncnes {

namespace {

bool better(double candidate, double incumbent, Sense sense) {
  return sense == Sense::maximize ? candidate > incumbent
                                  : candidate < incumbent;
}

double median_of(std::vector<double>& values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

std::vector<std::string> validate(const RunConfig& cfg,
                                  const ObjectiveSpec* objective) {
  std::vector<std::string> errors;
  if (cfg.lambda < 1) errors.push_back("lambda must be >= 1");
  if (cfg.mu < 1) errors.push_back("mu must be >= 1");
  if (cfg.phi < 0.0 || !std::isfinite(cfg.phi)) {
    errors.push_back("phi must be finite and >= 0");
  }
  if (cfg.eta_m_init <= 0.0 || !std::isfinite(cfg.eta_m_init)) {
    errors.push_back("eta_m_init must be finite and > 0");
  }
  if (cfg.eta_v_init <= 0.0 || !std::isfinite(cfg.eta_v_init)) {
    errors.push_back("eta_v_init must be finite and > 0");
  }
  if (cfg.budget_evals < 1) {
    errors.push_back("budget_evals must be >= 1");
  } else if (cfg.lambda >= 1 && cfg.mu >= 1 &&
             cfg.budget_evals <
                 static_cast<long long>(cfg.lambda) * cfg.mu) {
    errors.push_back("budget_evals must be >= lambda*mu");
  }
  if (cfg.reevals_min < 1 || cfg.reevals_max < cfg.reevals_min) {
    errors.push_back("reevals range must satisfy 1 <= min <= max");
  }
  if (cfg.init_box.empty()) {
    errors.push_back("init_box must define at least one dimension");
  }
  for (std::size_t d = 0; d < cfg.init_box.size(); ++d) {
    const Bounds& b = cfg.init_box[d];
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper) ||
        !(b.lower < b.upper)) {
      errors.push_back("init_box[" + std::to_string(d) +
                       "] must have finite lower < upper");
      break;
    }
  }
  if (cfg.ncs_sigma_init <= 0.0 || !std::isfinite(cfg.ncs_sigma_init)) {
    errors.push_back("ncs_sigma_init must be finite and > 0");
  }
  if (objective != nullptr && !cfg.init_box.empty() &&
      cfg.dim() != objective->dimension) {
    errors.push_back("init_box dimension " + std::to_string(cfg.dim()) +
                     " does not match objective dimension " +
                     std::to_string(objective->dimension));
  }
  return errors;
}

int reevals_for(const RunConfig& cfg, int proc, long long iter, int k) {
  if (cfg.reevals_min == cfg.reevals_max) return cfg.reevals_min;
  rng::Stream stream(cfg.seed, rng::Domain::reeval_count,
                     static_cast<std::uint64_t>(proc),
                     static_cast<std::uint64_t>(iter),
                     static_cast<std::uint64_t>(k));
  return static_cast<int>(stream.uniform_int(cfg.reevals_min, cfg.reevals_max));
}

long long iteration_cost(const RunConfig& cfg, long long iter) {
  if (cfg.reevals_min == cfg.reevals_max) {
    return static_cast<long long>(cfg.lambda) * cfg.mu * cfg.reevals_min;
  }
  long long total = 0;
  for (int i = 0; i < cfg.lambda; ++i) {
    for (int k = 0; k < cfg.mu; ++k) total += reevals_for(cfg, i, iter, k);
  }
  return total;
}

long long affordable_iterations(const RunConfig& cfg) {
  long long used = 0;
  long long iters = 0;
  while (true) {
    const long long cost = iteration_cost(cfg, iters);
    if (used + cost > cfg.budget_evals) return iters;
    used += cost;
    ++iters;
  }
}

SampleEvaluator direct_evaluator(const RunConfig& cfg, const Objective& obj) {
  return [cfg, obj](std::span<const double> x, int proc, long long iter,
                    int k) -> EvalOutcome {
    const int reevals = reevals_for(cfg, proc, iter, k);
    rng::Stream stream(cfg.seed, rng::Domain::eval_noise,
                       static_cast<std::uint64_t>(proc),
                       static_cast<std::uint64_t>(iter),
                       static_cast<std::uint64_t>(k));
    const double fitness = noisy_evaluate(obj, x, reevals, stream);
    if (!std::isfinite(fitness)) {
      throw EvaluationError(proc, k, "objective returned a non-finite value");
    }
    return {fitness, reevals};
  };
}

BatchEvaluator sequential_batch(SampleEvaluator evaluate) {
  return [evaluate = std::move(evaluate)](
             std::span<const std::vector<double>> solutions, int proc,
             long long iter) {
    std::vector<EvalOutcome> outcomes;
    outcomes.reserve(solutions.size());
    for (std::size_t k = 0; k < solutions.size(); ++k) {
      try {
        outcomes.push_back(evaluate(solutions[k], proc, iter,
                                    static_cast<int>(k)));
      } catch (const EvaluationError&) {
        throw;
      } catch (const std::exception& e) {
        throw EvaluationError(proc, static_cast<int>(k), e.what());
      }
    }
    return outcomes;
  };
}

ProcessStep step_process(const RunConfig& cfg,
                         std::span<const SearchDistribution> dists, int i,
                         long long iter, const BatchEvaluator& evaluate) {
  const SearchDistribution& self = dists[static_cast<std::size_t>(i)];

  ProcessStep step;
  step.batch.source = i;
  step.batch.solutions =
      sample(self, static_cast<std::size_t>(cfg.mu),
             rng::Stream(cfg.seed, rng::Domain::sample,
                         static_cast<std::uint64_t>(i),
                         static_cast<std::uint64_t>(iter)));

  const std::vector<EvalOutcome> outcomes =
      evaluate(step.batch.solutions, i, iter);
  if (outcomes.size() != step.batch.solutions.size()) {
    throw std::logic_error("batch evaluator returned wrong outcome count");
  }
  step.batch.fitnesses.resize(outcomes.size());
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    step.batch.fitnesses[k] = outcomes[k].fitness;
    step.evals_used += outcomes[k].evals;
  }

  const Utilities weights = shape_utilities(step.batch.fitnesses, cfg.sense);
  step.fit_grad = fitness_grad(self, step.batch, weights);
  if (cfg.phi != 0.0 || cfg.auto_phi) {
    step.div_grad = diversity_grad(static_cast<std::size_t>(i), dists);
  } else {
    step.div_grad.wrt_mean.assign(self.dim(), 0.0);
    step.div_grad.wrt_variance.assign(self.dim(), 0.0);
  }
  step.fish = fisher(self, step.batch);
  return step;
}

SearchDistribution apply_update(const RunConfig& cfg,
                                const SearchDistribution& dist,
                                const ProcessStep& step, double eta_m,
                                double eta_v, double phi) {
  if (cfg.update_rule == RunConfig::UpdateRule::natural) {
    return natural_step(dist, step.fit_grad, step.div_grad, step.fish, eta_m,
                        eta_v, phi);
  }
  return plain_step(dist, step.fit_grad, step.div_grad, eta_m, phi);
}

std::vector<SearchDistribution> initial_distributions(const RunConfig& cfg) {
  const int dim = cfg.dim();
  std::vector<SearchDistribution> dists(static_cast<std::size_t>(cfg.lambda));
  for (int i = 0; i < cfg.lambda; ++i) {
    rng::Stream stream(cfg.seed, rng::Domain::init_mean,
                       static_cast<std::uint64_t>(i));
    SearchDistribution& dist = dists[static_cast<std::size_t>(i)];
    dist.mean.resize(dim);
    dist.variance.resize(dim);
    for (int d = 0; d < dim; ++d) {
      const Bounds& b = cfg.init_box[static_cast<std::size_t>(d)];
      dist.mean[d] = stream.uniform(b.lower, b.upper);
      const double quarter = 0.25 * (b.upper - b.lower);
      dist.variance[d] = std::max(kVarFloor, quarter * quarter);
    }
  }
  return dists;
}

OptimizerState init_state(const RunConfig& cfg, const Objective& obj,
                          BatchEvaluator evaluate) {
  auto errors = validate(cfg, &obj.spec);
  if (!errors.empty()) {
    std::string joined = "invalid RunConfig:";
    for (const auto& e : errors) joined += " [" + e + "]";
    throw std::invalid_argument(joined);
  }
  OptimizerState state;
  state.cfg = cfg;
  state.objective = obj;
  state.evaluate = evaluate ? std::move(evaluate)
                            : sequential_batch(direct_evaluator(cfg, obj));
  state.dists = initial_distributions(cfg);
  state.phi_used = cfg.phi;
  return state;
}

void merge_bookkeeping(OptimizerState& state,
                       std::vector<ProcessStep>&& steps) {
  const RunConfig& cfg = state.cfg;

  long long cost = 0;
  CurvePoint point;
  point.process_mean_fitness.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const ProcessStep& s = steps[i];
    cost += s.evals_used;

    for (std::size_t k = 0; k < s.batch.fitnesses.size(); ++k) {
      const double f = s.batch.fitnesses[k];
      if (!state.has_best || better(f, state.best_fitness, cfg.sense)) {
        state.has_best = true;
        state.best_fitness = f;
        state.best_solution = s.batch.solutions[k];
      }
    }

    double mean_fit = 0.0;
    for (double f : s.batch.fitnesses) mean_fit += f;
    point.process_mean_fitness.push_back(
        mean_fit / static_cast<double>(s.batch.fitnesses.size()));
  }

  state.evals_used += cost;
  state.iteration += 1;
  point.iteration = state.iteration;
  point.evals = state.evals_used;
  point.best_fitness = state.best_fitness;
  point.mean_pairwise_db = mean_pairwise_distance(state.dists);
  state.curve.push_back(std::move(point));
}

void merge_iteration(OptimizerState& state,
                     std::span<const SearchDistribution> snapshot,
                     std::vector<ProcessStep>&& steps, double eta_m,
                     double eta_v) {
  const RunConfig& cfg = state.cfg;

  if (cfg.auto_phi && state.iteration == 0) {
    std::vector<double> fit_mags;
    std::vector<double> div_mags;
    for (const ProcessStep& s : steps) {
      for (double g : s.fit_grad.wrt_mean) fit_mags.push_back(std::abs(g));
      for (double g : s.fit_grad.wrt_variance) fit_mags.push_back(std::abs(g));
      for (double g : s.div_grad.wrt_mean) div_mags.push_back(std::abs(g));
      for (double g : s.div_grad.wrt_variance) div_mags.push_back(std::abs(g));
    }
    const double med_fit = median_of(fit_mags);
    const double med_div = median_of(div_mags);
    if (med_div > 0.0 && med_fit > 0.0) state.phi_used = med_fit / med_div;
  }

  for (std::size_t i = 0; i < steps.size(); ++i) {
    state.dists[i] = apply_update(cfg, snapshot[i], steps[i], eta_m, eta_v,
                                  state.phi_used);
  }
  merge_bookkeeping(state, std::move(steps));
}

bool iterate(OptimizerState& state) {
  const RunConfig& cfg = state.cfg;
  const long long cost = iteration_cost(cfg, state.iteration);
  if (state.evals_used + cost > cfg.budget_evals) return false;

  const double eta_m =
      schedule(cfg.eta_m_init, state.evals_used, cfg.budget_evals);
  const double eta_v =
      schedule(cfg.eta_v_init, state.evals_used, cfg.budget_evals);

  const std::vector<SearchDistribution> snapshot = state.dists;
  std::vector<ProcessStep> steps;
  steps.reserve(static_cast<std::size_t>(cfg.lambda));
  for (int i = 0; i < cfg.lambda; ++i) {
    steps.push_back(
        step_process(cfg, snapshot, i, state.iteration, state.evaluate));
  }
  merge_iteration(state, snapshot, std::move(steps), eta_m, eta_v);
  return true;
}

RunReport make_report(const OptimizerState& state) {
  RunReport report;
  report.best_solution = state.best_solution;
  report.best_fitness = state.best_fitness;
  report.curve = state.curve;
  report.evals_used = state.evals_used;
  report.iterations = state.iteration;
  report.phi_used = state.phi_used;
  return report;
}

RunReport run(const RunConfig& cfg, const Objective& obj) {
  const auto start = std::chrono::steady_clock::now();
  OptimizerState state = init_state(cfg, obj);
  RunReport report;
  try {
    while (iterate(state)) {
    }
    report = make_report(state);
  } catch (const EvaluationError& e) {
    report = make_report(state);
    report.valid = false;
    report.error = e.what();
  }
  report.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

}  // namespace ncnes

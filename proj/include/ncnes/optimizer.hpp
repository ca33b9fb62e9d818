#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncnes/gradient.hpp"
#include "ncnes/objectives.hpp"

namespace ncnes {

// All hyperparameters of one run. Defaults are the standard NCNES settings;
// reevals defaults to a fixed single evaluation (set 1:5 for noisy tasks).
struct RunConfig {
  int lambda = 5;
  int mu = 15;
  double phi = 0.0001;
  double eta_m_init = 0.5;
  double eta_v_init = 0.1;
  long long budget_evals = 0;  // counted in fitness evaluations
  std::uint64_t seed = 1;
  Sense sense = Sense::minimize;

  enum class UpdateRule { natural, plain };
  UpdateRule update_rule = UpdateRule::natural;

  int reevals_min = 1;
  int reevals_max = 1;

  std::vector<Bounds> init_box;  // initialization-only; search is unconstrained

  // When set, phi is re-derived at the first iteration as
  // median(|fitness-gradient components|) / median(|diversity-gradient
  // components|). Blocking execution only.
  bool auto_phi = false;

  // NCS-C baseline only: initial isotropic mutation scale.
  double ncs_sigma_init = 1.0;

  int dim() const { return static_cast<int>(init_box.size()); }
};

// Returns every violated invariant (empty means valid). When an objective
// spec is given, cross-checks the dimension as well.
std::vector<std::string> validate(const RunConfig& cfg,
                                  const ObjectiveSpec* objective = nullptr);

struct CurvePoint {
  long long iteration = 0;  // 1-based
  long long evals = 0;      // cumulative evaluations consumed
  double best_fitness = 0.0;
  double mean_pairwise_db = 0.0;
  std::vector<double> process_mean_fitness;  // one entry per process
};

struct RunReport {
  std::vector<double> best_solution;
  double best_fitness = std::numeric_limits<double>::quiet_NaN();
  std::vector<CurvePoint> curve;
  long long evals_used = 0;
  long long iterations = 0;
  double phi_used = 0.0;
  double wall_clock_s = 0.0;
  bool valid = true;
  std::string error;
};

// Raised when an objective evaluation fails; identifies the offender.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(int process, int sample, const std::string& what)
      : std::runtime_error("evaluation failed for process " +
                           std::to_string(process + 1) + ", sample " +
                           std::to_string(sample + 1) + ": " + what),
        process(process),
        sample(sample) {}
  int process;
  int sample;
};

// Evaluates one solution (including its re-evaluation averaging) and reports
// the number of evaluations consumed. Implementations must be pure functions
// of (x, proc, iter, k) so that any dispatch order gives the same result.
struct EvalOutcome {
  double fitness = 0.0;
  long long evals = 0;
};
using SampleEvaluator = std::function<EvalOutcome(
    std::span<const double> x, int proc, long long iter, int k)>;

// Evaluates a whole sample batch, outcomes aligned with the solutions. The
// hybrid engine substitutes a pool-dispatching implementation here.
using BatchEvaluator = std::function<std::vector<EvalOutcome>(
    std::span<const std::vector<double>> solutions, int proc, long long iter)>;

// The in-process evaluator: draws the re-evaluation count from its stream
// and averages noisy observations of the objective.
SampleEvaluator direct_evaluator(const RunConfig& cfg, const Objective& obj);

// Evaluates the batch one sample at a time on the calling thread.
BatchEvaluator sequential_batch(SampleEvaluator evaluate);

// Re-evaluation count for one solution; stream-derived, so it can be
// consulted before, during, or after the evaluation itself.
int reevals_for(const RunConfig& cfg, int proc, long long iter, int k);

// Total evaluations iteration `iter` will consume across all processes.
long long iteration_cost(const RunConfig& cfg, long long iter);

// Number of whole iterations the budget affords (no iteration may overshoot).
long long affordable_iterations(const RunConfig& cfg);

// Everything one process computes in one generation. The distribution update
// itself is applied later (apply_update) so all modes share the arithmetic.
struct ProcessStep {
  SampleBatch batch;
  GradientPair fit_grad;
  GradientPair div_grad;
  FisherDiagonals fish;
  long long evals_used = 0;
};

// One process's generation work against an immutable snapshot of all lambda
// distributions. Pure; safe to run concurrently for distinct processes.
ProcessStep step_process(const RunConfig& cfg,
                         std::span<const SearchDistribution> dists, int i,
                         long long iter, const BatchEvaluator& evaluate);

// Applies the configured update rule to one process.
SearchDistribution apply_update(const RunConfig& cfg,
                                const SearchDistribution& dist,
                                const ProcessStep& step, double eta_m,
                                double eta_v, double phi);

// Process means drawn uniformly from the init box (process-indexed streams);
// initial variance per dimension is ((upper-lower)/4)^2.
std::vector<SearchDistribution> initial_distributions(const RunConfig& cfg);

struct OptimizerState {
  RunConfig cfg;
  Objective objective;
  BatchEvaluator evaluate;
  std::vector<SearchDistribution> dists;
  long long evals_used = 0;
  long long iteration = 0;  // completed iterations
  double phi_used = 0.0;
  std::vector<double> best_solution;
  double best_fitness = std::numeric_limits<double>::quiet_NaN();
  bool has_best = false;
  std::vector<CurvePoint> curve;
};

// Throws std::invalid_argument when the config is invalid.
OptimizerState init_state(const RunConfig& cfg, const Objective& obj,
                          BatchEvaluator evaluate = nullptr);

// Coordinator-side bookkeeping shared by every execution mode: resolves phi,
// applies all updates, folds best-so-far in process order, appends the curve
// point. `snapshot` holds the distributions the steps were computed from.
void merge_iteration(OptimizerState& state,
                     std::span<const SearchDistribution> snapshot,
                     std::vector<ProcessStep>&& steps, double eta_m,
                     double eta_v);

// The bookkeeping half alone (budget, best-so-far, curve) for engines whose
// workers apply their own distribution updates; state.dists must already
// hold the post-iteration distributions.
void merge_bookkeeping(OptimizerState& state, std::vector<ProcessStep>&& steps);

// One full generation (serial). Returns false without side effects when the
// remaining budget cannot afford the iteration.
bool iterate(OptimizerState& state);

RunReport make_report(const OptimizerState& state);

// Algorithm entry point: initialize, iterate until the budget is exhausted.
// Objective failures abort and return a partial report flagged invalid.
RunReport run(const RunConfig& cfg, const Objective& obj);

}  // namespace ncnes

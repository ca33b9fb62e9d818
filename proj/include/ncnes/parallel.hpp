#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ncnes/optimizer.hpp"

namespace ncnes {

enum class ExecMode { serial, island, hybrid };
enum class Exchange { blocking, nonblocking };

// How one run is executed.
//
//   serial  - one worker does everything (workers == 1).
//   island  - one persistent worker per search process (workers == lambda);
//             workers exchange (mean, variance) snapshots each iteration.
//   hybrid  - island layout plus an evaluation pool of `workers` threads that
//             per-sample fitness evaluations are fanned out to. lambda*mu
//             threads give the full per-sample fan-out; smaller pools are
//             allowed and simply queue.
//
// Blocking exchange computes diversity gradients from current-iteration
// snapshots behind a barrier; nonblocking reads each peer's most recently
// published snapshot (normally the previous iteration's) without waiting.
struct ExecPlan {
  ExecMode mode = ExecMode::serial;
  int workers = 1;
  Exchange exchange = Exchange::blocking;

  // Artificial per-evaluation delay for speedup experiments; analytic
  // benchmarks are otherwise too fast to expose parallelism.
  double slow_eval_ms = 0.0;
  // Optional straggler: this process's evaluations take
  // slow_eval_ms * straggler_factor each.
  int straggler_index = -1;
  double straggler_factor = 1.0;
};

struct TimingReport {
  double wall_clock_s = 0.0;
  long long iterations = 0;
  // Mean worker iteration duration including synchronization waits; the
  // per-iteration wall-clock a process experiences.
  double mean_worker_iteration_s = 0.0;
  // Filled by comparison harnesses (needs a serial baseline), NaN otherwise.
  double speedup_ratio = std::numeric_limits<double>::quiet_NaN();
};

// Every violated plan invariant (empty means valid).
std::vector<std::string> validate(const ExecPlan& plan, const RunConfig& cfg);

// Runs the optimizer under the given plan. Serial, island-blocking and
// hybrid-blocking produce bit-identical RunReports for the same (cfg, seed);
// nonblocking differs only through the diversity gradients.
std::pair<RunReport, TimingReport> execute(const RunConfig& cfg,
                                           const ExecPlan& plan,
                                           const Objective& obj);

// runtime_serial / (runtime_parallel * m); 1.0 is linear speedup.
double speedup_ratio(double runtime_serial, double runtime_parallel, int m);

}  // namespace ncnes

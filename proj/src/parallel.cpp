#include "ncnes/parallel.hpp"

#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace ncnes {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Fixed-size pool for hybrid-mode fitness evaluations. Tasks are pure
// functions keyed by stream id, so any scheduling order yields the same
// values.
class EvalPool {
 public:
  explicit EvalPool(int threads) {
    for (int t = 0; t < threads; ++t) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~EvalPool() {
    {
      std::lock_guard lock(mutex_);
      done_ = true;
    }
    ready_.notify_all();
    for (auto& w : workers_) w.join();
  }

  std::future<EvalOutcome> submit(std::function<EvalOutcome()> task) {
    std::packaged_task<EvalOutcome()> packaged(std::move(task));
    auto future = packaged.get_future();
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(packaged));
    }
    ready_.notify_one();
    return future;
  }

 private:
  void worker_loop() {
    for (;;) {
      std::packaged_task<EvalOutcome()> task;
      {
        std::unique_lock lock(mutex_);
        ready_.wait(lock, [this] { return done_ || !queue_.empty(); });
        if (queue_.empty()) return;
        task = std::move(queue_.front());
        queue_.pop_front();
      }
      task();
    }
  }

  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<std::packaged_task<EvalOutcome()>> queue_;
  bool done_ = false;
  std::vector<std::thread> workers_;
};

SampleEvaluator with_delay(SampleEvaluator inner, const RunConfig& cfg,
                           const ExecPlan& plan) {
  if (plan.slow_eval_ms <= 0.0) return inner;
  return [inner = std::move(inner), cfg, plan](std::span<const double> x,
                                               int proc, long long iter,
                                               int k) {
    const double factor =
        proc == plan.straggler_index ? plan.straggler_factor : 1.0;
    const double ms =
        plan.slow_eval_ms * factor * reevals_for(cfg, proc, iter, k);
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
    return inner(x, proc, iter, k);
  };
}

BatchEvaluator pooled_batch(EvalPool& pool, SampleEvaluator evaluate) {
  return [&pool, evaluate = std::move(evaluate)](
             std::span<const std::vector<double>> solutions, int proc,
             long long iter) {
    std::vector<std::future<EvalOutcome>> futures;
    futures.reserve(solutions.size());
    for (std::size_t k = 0; k < solutions.size(); ++k) {
      const std::vector<double>& x = solutions[k];
      futures.push_back(pool.submit([&evaluate, &x, proc, iter, k] {
        return evaluate(x, proc, iter, static_cast<int>(k));
      }));
    }
    std::vector<EvalOutcome> outcomes;
    outcomes.reserve(solutions.size());
    for (std::size_t k = 0; k < futures.size(); ++k) {
      try {
        outcomes.push_back(futures[k].get());
      } catch (const EvaluationError&) {
        throw;
      } catch (const std::exception& e) {
        throw EvaluationError(proc, static_cast<int>(k), e.what());
      }
    }
    return outcomes;
  };
}

struct WorkerTimings {
  std::vector<std::vector<double>> per_worker;  // iteration durations

  double mean() const {
    double total = 0.0;
    long long n = 0;
    for (const auto& w : per_worker) {
      for (double d : w) {
        total += d;
        ++n;
      }
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
  }
};

// Serial engine: the optimizer loop with per-iteration timing.
void run_serial(OptimizerState& state, WorkerTimings& timings) {
  timings.per_worker.resize(1);
  for (;;) {
    const auto t0 = Clock::now();
    if (!iterate(state)) break;
    timings.per_worker[0].push_back(seconds_since(t0));
  }
}

// Blocking island engine: one persistent worker per process, a full barrier
// per iteration, coordinator merges between barriers. Identical inputs and
// merge order as the serial loop, hence bit-identical reports.
void run_island_blocking(OptimizerState& state, WorkerTimings& timings) {
  const RunConfig& cfg = state.cfg;
  const int lambda = cfg.lambda;
  const long long total_iters = affordable_iterations(cfg);
  timings.per_worker.resize(static_cast<std::size_t>(lambda));
  if (total_iters == 0) return;

  std::vector<SearchDistribution> snapshot;
  std::vector<ProcessStep> steps(static_cast<std::size_t>(lambda));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(lambda));
  long long iter = 0;
  std::atomic<bool> stop{false};

  std::barrier start_gate(lambda + 1);
  std::barrier end_gate(lambda + 1);

  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(lambda));
  for (int i = 0; i < lambda; ++i) {
    workers.emplace_back([&, i] {
      for (;;) {
        start_gate.arrive_and_wait();
        if (stop.load()) return;
        const auto t0 = Clock::now();
        try {
          steps[static_cast<std::size_t>(i)] =
              step_process(cfg, snapshot, i, iter, state.evaluate);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
        end_gate.arrive_and_wait();
        timings.per_worker[static_cast<std::size_t>(i)].push_back(
            seconds_since(t0));
      }
    });
  }

  std::exception_ptr failure;
  for (long long g = 0; g < total_iters && !failure; ++g) {
    iter = g;
    snapshot = state.dists;
    const double eta_m =
        schedule(cfg.eta_m_init, state.evals_used, cfg.budget_evals);
    const double eta_v =
        schedule(cfg.eta_v_init, state.evals_used, cfg.budget_evals);

    start_gate.arrive_and_wait();
    end_gate.arrive_and_wait();

    for (int i = 0; i < lambda && !failure; ++i) {
      if (errors[static_cast<std::size_t>(i)]) {
        failure = errors[static_cast<std::size_t>(i)];
      }
    }
    if (!failure) {
      merge_iteration(state, snapshot, std::move(steps), eta_m, eta_v);
      steps.assign(static_cast<std::size_t>(lambda), ProcessStep{});
    }
  }

  stop.store(true);
  start_gate.arrive_and_wait();
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

// Nonblocking island engine: workers never wait on each other. Peer
// distributions are read from single-writer slots holding each process's
// most recently published snapshot (normally one iteration stale). The
// global report is assembled from per-worker logs afterwards.
void run_island_nonblocking(OptimizerState& state, WorkerTimings& timings) {
  const RunConfig& cfg = state.cfg;
  const int lambda = cfg.lambda;
  const long long total_iters = affordable_iterations(cfg);
  timings.per_worker.resize(static_cast<std::size_t>(lambda));
  if (total_iters == 0) return;

  // Step sizes depend only on precomputed budget consumption.
  std::vector<double> eta_m_at(static_cast<std::size_t>(total_iters));
  std::vector<double> eta_v_at(static_cast<std::size_t>(total_iters));
  {
    long long used = 0;
    for (long long g = 0; g < total_iters; ++g) {
      eta_m_at[static_cast<std::size_t>(g)] =
          schedule(cfg.eta_m_init, used, cfg.budget_evals);
      eta_v_at[static_cast<std::size_t>(g)] =
          schedule(cfg.eta_v_init, used, cfg.budget_evals);
      used += iteration_cost(cfg, g);
    }
  }

  struct Slot {
    std::mutex mutex;
    SearchDistribution dist;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(lambda));
  for (int i = 0; i < lambda; ++i) {
    slots[static_cast<std::size_t>(i)].dist =
        state.dists[static_cast<std::size_t>(i)];
  }

  struct IterationLog {
    ProcessStep step;
    SearchDistribution updated;
  };
  std::vector<std::vector<IterationLog>> logs(
      static_cast<std::size_t>(lambda));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(lambda));
  std::atomic<bool> abort{false};

  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(lambda));
  for (int i = 0; i < lambda; ++i) {
    workers.emplace_back([&, i] {
      const auto self = static_cast<std::size_t>(i);
      try {
        for (long long g = 0; g < total_iters; ++g) {
          if (abort.load()) return;
          const auto t0 = Clock::now();

          std::vector<SearchDistribution> snapshot(
              static_cast<std::size_t>(lambda));
          for (int j = 0; j < lambda; ++j) {
            Slot& slot = slots[static_cast<std::size_t>(j)];
            std::lock_guard lock(slot.mutex);
            snapshot[static_cast<std::size_t>(j)] = slot.dist;
          }

          IterationLog log;
          log.step = step_process(cfg, snapshot, i, g, state.evaluate);
          log.updated = apply_update(cfg, snapshot[self], log.step,
                                     eta_m_at[static_cast<std::size_t>(g)],
                                     eta_v_at[static_cast<std::size_t>(g)],
                                     cfg.phi);
          {
            Slot& slot = slots[self];
            std::lock_guard lock(slot.mutex);
            slot.dist = log.updated;
          }
          logs[self].push_back(std::move(log));
          timings.per_worker[self].push_back(seconds_since(t0));
        }
      } catch (...) {
        errors[self] = std::current_exception();
        abort.store(true);
      }
    });
  }
  for (auto& w : workers) w.join();

  // Assemble the per-iteration records over the iterations every worker
  // completed; rethrow the first failure after salvaging those.
  long long completed = total_iters;
  for (int i = 0; i < lambda; ++i) {
    completed = std::min(
        completed,
        static_cast<long long>(logs[static_cast<std::size_t>(i)].size()));
  }
  for (long long g = 0; g < completed; ++g) {
    std::vector<ProcessStep> steps;
    steps.reserve(static_cast<std::size_t>(lambda));
    for (int i = 0; i < lambda; ++i) {
      IterationLog& log = logs[static_cast<std::size_t>(i)][
          static_cast<std::size_t>(g)];
      steps.push_back(std::move(log.step));
      state.dists[static_cast<std::size_t>(i)] = log.updated;
    }
    // Workers already applied their updates against their own snapshot
    // views; only the bookkeeping half is shared here.
    merge_bookkeeping(state, std::move(steps));
  }

  for (int i = 0; i < lambda; ++i) {
    if (errors[static_cast<std::size_t>(i)]) {
      std::rethrow_exception(errors[static_cast<std::size_t>(i)]);
    }
  }
}

}  // namespace

std::vector<std::string> validate(const ExecPlan& plan, const RunConfig& cfg) {
  std::vector<std::string> errors;
  switch (plan.mode) {
    case ExecMode::serial:
      if (plan.workers != 1) {
        errors.push_back("serial mode requires workers == 1");
      }
      if (plan.exchange != Exchange::blocking) {
        errors.push_back("serial mode is inherently blocking");
      }
      break;
    case ExecMode::island:
      if (plan.workers != cfg.lambda) {
        errors.push_back("island mode requires workers == lambda (" +
                         std::to_string(cfg.lambda) + ")");
      }
      break;
    case ExecMode::hybrid:
      if (plan.workers < 1) {
        errors.push_back("hybrid mode requires an evaluation pool of >= 1");
      }
      break;
  }
  if (plan.slow_eval_ms < 0.0 || !std::isfinite(plan.slow_eval_ms)) {
    errors.push_back("slow_eval_ms must be finite and >= 0");
  }
  if (plan.straggler_index >= cfg.lambda) {
    errors.push_back("straggler_index out of range");
  }
  if (plan.straggler_factor <= 0.0 || !std::isfinite(plan.straggler_factor)) {
    errors.push_back("straggler_factor must be finite and > 0");
  }
  if (cfg.auto_phi && plan.exchange == Exchange::nonblocking) {
    errors.push_back("auto_phi requires blocking exchange");
  }
  return errors;
}

std::pair<RunReport, TimingReport> execute(const RunConfig& cfg,
                                           const ExecPlan& plan,
                                           const Objective& obj) {
  {
    auto errors = validate(plan, cfg);
    if (!errors.empty()) {
      std::string joined = "invalid ExecPlan:";
      for (const auto& e : errors) joined += " [" + e + "]";
      throw std::invalid_argument(joined);
    }
  }

  const auto t0 = Clock::now();
  const SampleEvaluator sample_eval =
      with_delay(direct_evaluator(cfg, obj), cfg, plan);

  // The pool must outlive the state that evaluates through it.
  std::unique_ptr<EvalPool> pool;
  BatchEvaluator batch_eval;
  if (plan.mode == ExecMode::hybrid) {
    pool = std::make_unique<EvalPool>(plan.workers);
    batch_eval = pooled_batch(*pool, sample_eval);
  } else {
    batch_eval = sequential_batch(sample_eval);
  }

  OptimizerState state = init_state(cfg, obj, std::move(batch_eval));
  WorkerTimings timings;
  RunReport report;
  try {
    if (plan.mode == ExecMode::serial) {
      run_serial(state, timings);
    } else if (plan.exchange == Exchange::blocking) {
      run_island_blocking(state, timings);
    } else {
      run_island_nonblocking(state, timings);
    }
    report = make_report(state);
  } catch (const EvaluationError& e) {
    report = make_report(state);
    report.valid = false;
    report.error = e.what();
  }
  report.wall_clock_s = seconds_since(t0);

  TimingReport timing;
  timing.wall_clock_s = report.wall_clock_s;
  timing.iterations = report.iterations;
  timing.mean_worker_iteration_s = timings.mean();
  return {std::move(report), timing};
}

double speedup_ratio(double runtime_serial, double runtime_parallel, int m) {
  if (runtime_serial <= 0.0 || runtime_parallel <= 0.0 || m < 1) {
    throw std::invalid_argument("speedup_ratio: arguments must be positive");
  }
  return runtime_serial / (runtime_parallel * m);
}

}  // namespace ncnes

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ncnes/gradient.hpp"
#include "ncnes/rng.hpp"

namespace ncnes {

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct ObjectiveSpec {
  std::string id;
  int dimension = 0;
  Sense sense = Sense::minimize;
  double noise_sd = 0.0;
  std::vector<Bounds> domain_box;  // advisory; initialization default
  std::optional<std::pair<std::vector<double>, double>> known_optimum;
};

// A registered objective. Analytic objectives carry a deterministic value
// function; episodic objectives carry a rollout averaged over stream-driven
// episodes. Exactly one of the two callables is set.
struct Objective {
  ObjectiveSpec spec;
  std::function<double(std::span<const double>)> analytic;
  std::function<double(std::span<const double>, int, rng::Stream&)> episodic;
};

// Deterministic value: the analytic function, or for episodic objectives the
// rollout under a fixed reference stream.
double evaluate(const Objective& obj, std::span<const double> x);

// Mean of `reevals` noisy observations. Analytic objectives add
// N(0, noise_sd^2) observation noise per draw; episodic objectives average
// `reevals` episodes. The stream is taken by value, so the same key always
// reproduces the same observation.
double noisy_evaluate(const Objective& obj, std::span<const double> x,
                      int reevals, rng::Stream stream);

// Objective families addressable by string id from configs. Built-ins:
// sphere, rastrigin, ackley, griewank (minimize, optimum 0 at the origin)
// and cartpole (maximize, fixed dimension = policy weight count).
class ObjectiveRegistry {
 public:
  using Factory = std::function<Objective(int dimension, double noise_sd)>;

  static ObjectiveRegistry& global();

  void add(const std::string& id, Factory factory);
  bool contains(const std::string& id) const;
  // Throws std::invalid_argument for unknown ids or bad dimensions.
  Objective make(const std::string& id, int dimension,
                 double noise_sd = 0.0) const;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, Factory> factories_;
};

// Standard benchmark definitions, exposed directly for tests.
double sphere_value(std::span<const double> x);
double rastrigin_value(std::span<const double> x);
double ackley_value(std::span<const double> x);
double griewank_value(std::span<const double> x);

}  // namespace ncnes

#include "ncnes/objectives.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ncnes/policy.hpp"

namespace ncnes {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_dimension(const ObjectiveSpec& spec, std::size_t got) {
  if (static_cast<int>(got) != spec.dimension) {
    throw std::invalid_argument("objective '" + spec.id + "' expects " +
                                std::to_string(spec.dimension) +
                                " dimensions, got " + std::to_string(got));
  }
}

std::vector<Bounds> uniform_box(int dimension, double lo, double hi) {
  return std::vector<Bounds>(static_cast<std::size_t>(dimension),
                             Bounds{lo, hi});
}

Objective analytic_objective(std::string id, int dimension, double noise_sd,
                             double box_half,
                             double (*fn)(std::span<const double>)) {
  if (dimension < 1) {
    throw std::invalid_argument("objective '" + id +
                                "': dimension must be >= 1");
  }
  Objective obj;
  obj.spec.id = std::move(id);
  obj.spec.dimension = dimension;
  obj.spec.sense = Sense::minimize;
  obj.spec.noise_sd = noise_sd;
  obj.spec.domain_box = uniform_box(dimension, -box_half, box_half);
  obj.spec.known_optimum = {std::vector<double>(dimension, 0.0), 0.0};
  obj.analytic = fn;
  return obj;
}

}  // namespace

double sphere_value(std::span<const double> x) {
  double total = 0.0;
  for (double xi : x) total += xi * xi;
  return total;
}

double rastrigin_value(std::span<const double> x) {
  double total = 10.0 * static_cast<double>(x.size());
  for (double xi : x) total += xi * xi - 10.0 * std::cos(kTwoPi * xi);
  return total;
}

double ackley_value(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double sq = 0.0;
  double cs = 0.0;
  for (double xi : x) {
    sq += xi * xi;
    cs += std::cos(kTwoPi * xi);
  }
  return -20.0 * std::exp(-0.2 * std::sqrt(sq / n)) - std::exp(cs / n) + 20.0 +
         std::numbers::e;
}

double griewank_value(std::span<const double> x) {
  double sum = 0.0;
  double prod = 1.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    sum += x[d] * x[d] / 4000.0;
    prod *= std::cos(x[d] / std::sqrt(static_cast<double>(d + 1)));
  }
  return sum - prod + 1.0;
}

double evaluate(const Objective& obj, std::span<const double> x) {
  require_dimension(obj.spec, x.size());
  if (obj.analytic) return obj.analytic(x);
  // Fixed reference stream: the episodic value is deterministic per seed.
  rng::Stream ref(0, rng::Domain::episode);
  return obj.episodic(x, 1, ref);
}

double noisy_evaluate(const Objective& obj, std::span<const double> x,
                      int reevals, rng::Stream stream) {
  require_dimension(obj.spec, x.size());
  if (reevals < 1) throw std::invalid_argument("noisy_evaluate: reevals < 1");
  if (obj.episodic) return obj.episodic(x, reevals, stream);

  const double base = obj.analytic(x);
  if (obj.spec.noise_sd == 0.0) return base;
  double total = 0.0;
  for (int r = 0; r < reevals; ++r) {
    total += base + obj.spec.noise_sd * stream.normal();
  }
  return total / reevals;
}

ObjectiveRegistry& ObjectiveRegistry::global() {
  static ObjectiveRegistry registry = [] {
    ObjectiveRegistry r;
    r.add("sphere", [](int dim, double sd) {
      return analytic_objective("sphere", dim, sd, 5.12, sphere_value);
    });
    r.add("rastrigin", [](int dim, double sd) {
      return analytic_objective("rastrigin", dim, sd, 5.12, rastrigin_value);
    });
    r.add("ackley", [](int dim, double sd) {
      return analytic_objective("ackley", dim, sd, 32.768, ackley_value);
    });
    r.add("griewank", [](int dim, double sd) {
      return analytic_objective("griewank", dim, sd, 600.0, griewank_value);
    });
    r.add("cartpole", [](int dim, double sd) {
      const int weights = cartpole_codec().weight_count();
      if (dim != 0 && dim != weights) {
        throw std::invalid_argument(
            "objective 'cartpole' has fixed dimension " +
            std::to_string(weights));
      }
      Objective obj;
      obj.spec.id = "cartpole";
      obj.spec.dimension = weights;
      obj.spec.sense = Sense::maximize;
      obj.spec.noise_sd = sd;  // informational; randomness comes from episodes
      obj.spec.domain_box = uniform_box(weights, -1.0, 1.0);
      obj.episodic = [](std::span<const double> x, int episodes,
                        rng::Stream& stream) {
        return policy_rollout(x, episodes, stream);
      };
      return obj;
    });
    return r;
  }();
  return registry;
}

void ObjectiveRegistry::add(const std::string& id, Factory factory) {
  factories_[id] = std::move(factory);
}

bool ObjectiveRegistry::contains(const std::string& id) const {
  return factories_.count(id) > 0;
}

Objective ObjectiveRegistry::make(const std::string& id, int dimension,
                                  double noise_sd) const {
  auto it = factories_.find(id);
  if (it == factories_.end()) {
    throw std::invalid_argument("unknown objective id '" + id + "'");
  }
  return it->second(dimension, noise_sd);
}

std::vector<std::string> ObjectiveRegistry::ids() const {
  std::vector<std::string> out;
  out.reserve(factories_.size());
  for (const auto& [id, _] : factories_) out.push_back(id);
  return out;
}

}  // namespace ncnes

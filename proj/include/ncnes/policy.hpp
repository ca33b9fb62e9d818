#pragma once

#include <span>
#include <vector>

#include "ncnes/rng.hpp"

namespace ncnes {

// Weight layout of a small feedforward policy (tanh hidden layers, linear
// output, argmax action). Each layer stores its weight matrix row-major
// followed by its bias vector, so the flat length is sum (in+1)*out.
struct PolicyCodec {
  std::vector<int> layers;  // e.g. {4, 8, 2}

  int weight_count() const;

  struct Layer {
    std::vector<double> weights;  // out x in, row-major
    std::vector<double> bias;     // out
  };

  // Throws std::invalid_argument when flat.size() != weight_count().
  std::vector<Layer> unflatten(std::span<const double> flat) const;
  std::vector<double> flatten(const std::vector<Layer>& layers_in) const;

  // Forward pass returning the argmax output index (ties -> lower index).
  int act(std::span<const double> flat, std::span<const double> obs) const;
};

// The built-in episodic task: a pole balanced on a force-controlled cart.
//
// Dynamics constants (Euler integration):
//   gravity 9.8, cart mass 1.0, pole mass 0.1, pole half-length 0.5,
//   force magnitude 10.0, time step 0.02 s.
// An episode starts from all four state variables drawn uniformly from
// [-0.05, 0.05] and ends when |x| > 2.4, |theta| > 12 degrees, or after 500
// steps. Reward is +1 per surviving step, delivered only as the episode
// total.
struct CartPoleTask {
  static constexpr int kObservations = 4;
  static constexpr int kActions = 2;
  static constexpr int kMaxSteps = 500;

  // Returns the undiscounted return of one episode whose initial state is
  // drawn from the stream.
  static double episode(const PolicyCodec& codec, std::span<const double> w,
                        rng::Stream& stream);
};

// The policy shape used by the registered "cartpole" objective.
const PolicyCodec& cartpole_codec();

// Average undiscounted return over `episodes` episodes. Throws
// std::invalid_argument on non-finite weights or a length mismatch.
double policy_rollout(std::span<const double> weights, int episodes,
                      rng::Stream& stream);

}  // namespace ncnes

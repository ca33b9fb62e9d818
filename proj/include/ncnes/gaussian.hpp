#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ncnes/rng.hpp"

namespace ncnes {

// Smallest allowed variance component. Updates clamp to this floor so that
// every inverse and log over variances stays finite.
inline constexpr double kVarFloor = 1e-8;

// One search process's diagonal Gaussian.
struct SearchDistribution {
  std::vector<double> mean;
  std::vector<double> variance;  // same length as mean, each >= kVarFloor

  std::size_t dim() const { return mean.size(); }
};

// Throws std::invalid_argument when the invariants do not hold:
// matching lengths, D >= 1, every variance component finite and >= kVarFloor.
void validate(const SearchDistribution& dist);

// The mu solutions one process drew in one iteration together with their
// (re-evaluation averaged) fitness values. Immutable once filled in.
struct SampleBatch {
  std::vector<std::vector<double>> solutions;
  std::vector<double> fitnesses;
  int source = 0;  // owning process index, 0-based
};

// Draws `count` solutions elementwise as mean[d] + sqrt(variance[d]) * z.
// Deviates are consumed sample-major, dimension-minor. The stream is taken
// by value, so calling twice with the same key reproduces the same list.
std::vector<std::vector<double>> sample(const SearchDistribution& dist,
                                        std::size_t count, rng::Stream stream);

// Bhattacharyya distance between two diagonal Gaussians,
//   sum_d (1/8) (ma-mb)^2 / s + (1/2) ln( s / sqrt(va*vb) ),  s = (va+vb)/2.
// Symmetric, nonnegative, zero iff the distributions coincide.
double bhattacharyya(const SearchDistribution& a, const SearchDistribution& b);

// Diversity contribution of process i: sum of Bhattacharyya distances to all
// other processes. Zero when there are no peers.
double diversity_value(std::size_t i, std::span<const SearchDistribution> dists);

// Mean Bhattacharyya distance over unordered pairs; 0 with fewer than two
// processes. Exported as the per-iteration diversity diagnostic.
double mean_pairwise_distance(std::span<const SearchDistribution> dists);

}  // namespace ncnes

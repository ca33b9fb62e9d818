#include "ncnes/gaussian.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ncnes {

void validate(const SearchDistribution& dist) {
  if (dist.mean.empty()) {
    throw std::invalid_argument("SearchDistribution: dimension must be >= 1");
  }
  if (dist.mean.size() != dist.variance.size()) {
    throw std::invalid_argument(
        "SearchDistribution: mean and variance lengths differ (" +
        std::to_string(dist.mean.size()) + " vs " +
        std::to_string(dist.variance.size()) + ")");
  }
  for (std::size_t d = 0; d < dist.mean.size(); ++d) {
    if (!std::isfinite(dist.mean[d])) {
      throw std::invalid_argument("SearchDistribution: mean[" +
                                  std::to_string(d) + "] is not finite");
    }
    if (!std::isfinite(dist.variance[d]) || dist.variance[d] < kVarFloor) {
      throw std::invalid_argument("SearchDistribution: variance[" +
                                  std::to_string(d) +
                                  "] below floor or not finite");
    }
  }
}

std::vector<std::vector<double>> sample(const SearchDistribution& dist,
                                        std::size_t count, rng::Stream stream) {
  validate(dist);
  if (count < 1) throw std::invalid_argument("sample: count must be >= 1");

  const std::size_t dim = dist.dim();
  std::vector<double> sd(dim);
  for (std::size_t d = 0; d < dim; ++d) sd[d] = std::sqrt(dist.variance[d]);

  std::vector<std::vector<double>> out(count, std::vector<double>(dim));
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t d = 0; d < dim; ++d) {
      out[k][d] = dist.mean[d] + sd[d] * stream.normal();
    }
  }
  return out;
}

double bhattacharyya(const SearchDistribution& a, const SearchDistribution& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("bhattacharyya: dimension mismatch (" +
                                std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()) + ")");
  }
  double total = 0.0;
  for (std::size_t d = 0; d < a.dim(); ++d) {
    const double s = 0.5 * (a.variance[d] + b.variance[d]);
    const double dm = a.mean[d] - b.mean[d];
    total += 0.125 * dm * dm / s +
             0.5 * std::log(s / std::sqrt(a.variance[d] * b.variance[d]));
  }
  // The analytic value is >= 0; rounding can leave a tiny negative residue
  // for near-identical inputs.
  return total < 0.0 ? 0.0 : total;
}

double diversity_value(std::size_t i,
                       std::span<const SearchDistribution> dists) {
  if (i >= dists.size()) {
    throw std::invalid_argument("diversity_value: process index out of range");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < dists.size(); ++j) {
    if (j == i) continue;  // self term is identically zero
    total += bhattacharyya(dists[i], dists[j]);
  }
  return total;
}

double mean_pairwise_distance(std::span<const SearchDistribution> dists) {
  const std::size_t n = dists.size();
  if (n < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      total += bhattacharyya(dists[i], dists[j]);
    }
  }
  return total / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace ncnes

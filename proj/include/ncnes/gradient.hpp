#pragma once

#include <span>
#include <vector>

#include "ncnes/gaussian.hpp"

namespace ncnes {

// Floor for the sampled Fisher diagonals. The sample estimate can vanish on
// degenerate batches; flooring turns an unusable preconditioner into a
// bounded step.
inline constexpr double kFisherFloor = 1e-10;

enum class Sense { maximize, minimize };

// Mean- and variance-gradient of some scalar model for one process.
struct GradientPair {
  std::vector<double> wrt_mean;
  std::vector<double> wrt_variance;
};

// Diagonal Fisher information estimates for mean and variance coordinates.
struct FisherDiagonals {
  std::vector<double> for_mean;      // each >= kFisherFloor
  std::vector<double> for_variance;  // each >= kFisherFloor
};

// Rank-based utility values aligned with the sample batch. They sum to zero
// and each lies in (-1/mu, 1].
struct Utilities {
  std::vector<double> values;
};

// Rank-shapes raw fitness values:
//   U(rank) = max(0, ln(mu/2 + 1) - ln(rank)) / sum_j max(0, ...) - 1/mu,
// with rank 1 for the best value under `sense` and ties broken by lower
// sample index. Output is aligned to input order.
Utilities shape_utilities(std::span<const double> fitnesses, Sense sense);

// Sampled fitness-model gradient (diagonal Gaussian):
//   wrt_mean[d]     = (1/mu) sum_k (x_k[d]-m[d]) / v[d] * u_k
//   wrt_variance[d] = (1/mu) sum_k ((x_k[d]-m[d])^2 / (2 v[d]^2)
//                                   - 1/(2 v[d])) * u_k
GradientPair fitness_grad(const SearchDistribution& dist,
                          const SampleBatch& batch, const Utilities& weights);

// Exact diversity-model gradient for process i, summed over peers j != i
// with s_ij[d] = (v_i[d] + v_j[d]) / 2:
//   wrt_mean[d]     = (1/4) sum_j (m_i[d]-m_j[d]) / s_ij[d]
//   wrt_variance[d] = (1/4) sum_j (1/s_ij[d]
//                       - (1/4)(m_i[d]-m_j[d])^2 / s_ij[d]^2 - 1/v_i[d])
// Zero when there are no peers.
GradientPair diversity_grad(std::size_t i,
                            std::span<const SearchDistribution> dists);

// Sampled diagonal Fisher information:
//   for_mean[d]     = (1/mu)  sum_k (x_k[d]-m[d])^2 / v[d]^2
//   for_variance[d] = (1/4mu) sum_k ((x_k[d]-m[d])^2 / v[d]^2 - 1/v[d])^2
// floored at kFisherFloor componentwise.
FisherDiagonals fisher(const SearchDistribution& dist,
                       const SampleBatch& batch);

// Step-size decay: eta_init * (e - e^(t_cur/t_max)) / (e - 1).
// Equals eta_init at t_cur = 0, 0 at t_cur = t_max; negative factors (from
// t_cur > t_max) clamp to 0.
double schedule(double eta_init, long long t_cur, long long t_max);

// Natural-gradient update:
//   mean'[d] = mean[d] + eta_m * (fit_m[d] + phi*div_m[d]) / fisher_m[d]
//   var'[d]  = max(kVarFloor,
//                  var[d] + eta_v * (fit_v[d] + phi*div_v[d]) / fisher_v[d])
// Throws std::runtime_error naming the coordinate if an intermediate is not
// finite.
SearchDistribution natural_step(const SearchDistribution& dist,
                                const GradientPair& fit,
                                const GradientPair& div,
                                const FisherDiagonals& fish, double eta_m,
                                double eta_v, double phi);

// Same update without Fisher preconditioning; one step size for both
// channels. Variance flooring and error behaviour as natural_step.
SearchDistribution plain_step(const SearchDistribution& dist,
                              const GradientPair& fit, const GradientPair& div,
                              double eta, double phi);

}  // namespace ncnes

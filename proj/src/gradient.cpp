#include "ncnes/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ncnes {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " +
                                std::to_string(b) + ")");
  }
}

void require_finite(double value, const char* what, std::size_t coord) {
  if (!std::isfinite(value)) {
    throw std::runtime_error(std::string("non-finite ") + what +
                             " at coordinate " + std::to_string(coord));
  }
}

}  // namespace

Utilities shape_utilities(std::span<const double> fitnesses, Sense sense) {
  const std::size_t mu = fitnesses.size();
  if (mu < 1) throw std::invalid_argument("shape_utilities: empty batch");
  for (std::size_t k = 0; k < mu; ++k) {
    if (!std::isfinite(fitnesses[k])) {
      throw std::invalid_argument("shape_utilities: fitness[" +
                                  std::to_string(k) + "] is not finite");
    }
  }

  // Stable sort gives the tie rule: equal fitness, lower index ranks better.
  std::vector<std::size_t> order(mu);
  std::iota(order.begin(), order.end(), 0);
  if (sense == Sense::maximize) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return fitnesses[a] > fitnesses[b];
    });
  } else {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return fitnesses[a] < fitnesses[b];
    });
  }

  const double log_half = std::log(0.5 * static_cast<double>(mu) + 1.0);
  std::vector<double> raw(mu);
  double denom = 0.0;
  for (std::size_t r = 0; r < mu; ++r) {
    raw[r] = std::max(0.0, log_half - std::log(static_cast<double>(r + 1)));
    denom += raw[r];
  }

  Utilities util;
  util.values.resize(mu);
  const double inv_mu = 1.0 / static_cast<double>(mu);
  for (std::size_t r = 0; r < mu; ++r) {
    util.values[order[r]] = raw[r] / denom - inv_mu;
  }
  return util;
}

GradientPair fitness_grad(const SearchDistribution& dist,
                          const SampleBatch& batch, const Utilities& weights) {
  const std::size_t dim = dist.dim();
  const std::size_t mu = batch.solutions.size();
  if (mu != weights.values.size() || mu != batch.fitnesses.size()) {
    throw std::invalid_argument("fitness_grad: batch/weight count mismatch");
  }
  for (const auto& x : batch.solutions) {
    require_same_dim(x.size(), dim, "fitness_grad");
  }

  GradientPair grad;
  grad.wrt_mean.assign(dim, 0.0);
  grad.wrt_variance.assign(dim, 0.0);
  for (std::size_t k = 0; k < mu; ++k) {
    const double u = weights.values[k];
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = batch.solutions[k][d] - dist.mean[d];
      const double v = dist.variance[d];
      grad.wrt_mean[d] += diff / v * u;
      grad.wrt_variance[d] += (diff * diff / (2.0 * v * v) - 1.0 / (2.0 * v)) * u;
    }
  }
  const double inv_mu = 1.0 / static_cast<double>(mu);
  for (std::size_t d = 0; d < dim; ++d) {
    grad.wrt_mean[d] *= inv_mu;
    grad.wrt_variance[d] *= inv_mu;
  }
  return grad;
}

GradientPair diversity_grad(std::size_t i,
                            std::span<const SearchDistribution> dists) {
  if (i >= dists.size()) {
    throw std::invalid_argument("diversity_grad: process index out of range");
  }
  const SearchDistribution& self = dists[i];
  const std::size_t dim = self.dim();

  GradientPair grad;
  grad.wrt_mean.assign(dim, 0.0);
  grad.wrt_variance.assign(dim, 0.0);
  for (std::size_t j = 0; j < dists.size(); ++j) {
    if (j == i) continue;
    require_same_dim(dists[j].dim(), dim, "diversity_grad");
    for (std::size_t d = 0; d < dim; ++d) {
      const double s = 0.5 * (self.variance[d] + dists[j].variance[d]);
      const double dm = self.mean[d] - dists[j].mean[d];
      grad.wrt_mean[d] += 0.25 * dm / s;
      grad.wrt_variance[d] +=
          0.25 * (1.0 / s - 0.25 * dm * dm / (s * s) - 1.0 / self.variance[d]);
    }
  }
  return grad;
}

FisherDiagonals fisher(const SearchDistribution& dist,
                       const SampleBatch& batch) {
  const std::size_t dim = dist.dim();
  const std::size_t mu = batch.solutions.size();
  if (mu < 1) throw std::invalid_argument("fisher: empty batch");
  for (const auto& x : batch.solutions) {
    require_same_dim(x.size(), dim, "fisher");
  }

  FisherDiagonals out;
  out.for_mean.assign(dim, 0.0);
  out.for_variance.assign(dim, 0.0);
  for (std::size_t k = 0; k < mu; ++k) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = batch.solutions[k][d] - dist.mean[d];
      const double v = dist.variance[d];
      const double q = diff * diff / (v * v);
      out.for_mean[d] += q;
      const double r = q - 1.0 / v;
      out.for_variance[d] += r * r;
    }
  }
  const double inv_mu = 1.0 / static_cast<double>(mu);
  for (std::size_t d = 0; d < dim; ++d) {
    out.for_mean[d] = std::max(kFisherFloor, out.for_mean[d] * inv_mu);
    out.for_variance[d] =
        std::max(kFisherFloor, out.for_variance[d] * inv_mu * 0.25);
  }
  return out;
}

double schedule(double eta_init, long long t_cur, long long t_max) {
  if (eta_init <= 0.0) throw std::invalid_argument("schedule: eta_init <= 0");
  if (t_max <= 0) throw std::invalid_argument("schedule: t_max <= 0");
  const double ratio =
      static_cast<double>(t_cur) / static_cast<double>(t_max);
  const double e = std::numbers::e;
  const double factor = (e - std::exp(ratio)) / (e - 1.0);
  return eta_init * std::max(0.0, factor);
}

namespace {

SearchDistribution stepped(const SearchDistribution& dist,
                           const GradientPair& fit, const GradientPair& div,
                           const FisherDiagonals* fish, double eta_m,
                           double eta_v, double phi) {
  const std::size_t dim = dist.dim();
  require_same_dim(fit.wrt_mean.size(), dim, "step");
  require_same_dim(div.wrt_mean.size(), dim, "step");
  if (fish != nullptr) require_same_dim(fish->for_mean.size(), dim, "step");

  SearchDistribution next = dist;
  for (std::size_t d = 0; d < dim; ++d) {
    double gm = fit.wrt_mean[d] + phi * div.wrt_mean[d];
    double gv = fit.wrt_variance[d] + phi * div.wrt_variance[d];
    if (fish != nullptr) {
      gm /= fish->for_mean[d];
      gv /= fish->for_variance[d];
    }
    const double m = dist.mean[d] + eta_m * gm;
    const double v = dist.variance[d] + eta_v * gv;
    require_finite(m, "mean update", d);
    require_finite(v, "variance update", d);
    next.mean[d] = m;
    next.variance[d] = std::max(kVarFloor, v);
  }
  return next;
}

}  // namespace

SearchDistribution natural_step(const SearchDistribution& dist,
                                const GradientPair& fit,
                                const GradientPair& div,
                                const FisherDiagonals& fish, double eta_m,
                                double eta_v, double phi) {
  return stepped(dist, fit, div, &fish, eta_m, eta_v, phi);
}

SearchDistribution plain_step(const SearchDistribution& dist,
                              const GradientPair& fit, const GradientPair& div,
                              double eta, double phi) {
  return stepped(dist, fit, div, nullptr, eta, eta, phi);
}

}  // namespace ncnes

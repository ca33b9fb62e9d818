// Test-only oracles, independent of the library's closed forms:
// composite-Simpson integration for Bhattacharyya coefficients, central
// finite differences, and Gauss-Hermite quadrature for Gaussian
// expectations.
#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "ncnes/gaussian.hpp"

namespace oracle {

template <class F>
double simpson(F f, double lo, double hi, int intervals) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (hi - lo) / intervals;
  double total = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) {
    total += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return total * h / 3.0;
}

inline double gauss_pdf(double x, double m, double v) {
  const double d = x - m;
  return std::exp(-0.5 * d * d / v) / std::sqrt(2.0 * std::numbers::pi * v);
}

// Bhattacharyya coefficient of two 1-D Gaussians by quadrature.
inline double bc_coefficient_1d(double m1, double v1, double m2, double v2) {
  const double s1 = std::sqrt(v1);
  const double s2 = std::sqrt(v2);
  const double lo = std::min(m1 - 12.0 * s1, m2 - 12.0 * s2);
  const double hi = std::max(m1 + 12.0 * s1, m2 + 12.0 * s2);
  return simpson(
      [&](double x) {
        return std::sqrt(gauss_pdf(x, m1, v1) * gauss_pdf(x, m2, v2));
      },
      lo, hi, 20000);
}

// -ln integral sqrt(p q) for diagonal Gaussians; the integral factorizes
// across dimensions, each factor integrated numerically.
inline double bhattacharyya_by_integration(const ncnes::SearchDistribution& a,
                                           const ncnes::SearchDistribution& b) {
  double log_coeff = 0.0;
  for (std::size_t d = 0; d < a.dim(); ++d) {
    log_coeff += std::log(
        bc_coefficient_1d(a.mean[d], a.variance[d], b.mean[d], b.variance[d]));
  }
  return -log_coeff;
}

inline double central_difference(const std::function<double(double)>& f,
                                 double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Nodes and weights for integral f(t) exp(-t^2) dt (Newton iteration on the
// Hermite recurrence).
inline void gauss_hermite(int n, std::vector<double>& nodes,
                          std::vector<double>& weights) {
  constexpr double kEps = 3.0e-14;
  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  double z = 0.0;
  double pp = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) -
          1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * nodes[1];
    } else {
      z = 2.0 * z - nodes[i - 2];
    }
    for (int its = 0; its < 100; ++its) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
             std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= kEps) break;
    }
    nodes[i] = z;
    nodes[n - 1 - i] = -z;
    weights[i] = 2.0 / (pp * pp);
    weights[n - 1 - i] = weights[i];
  }
}

// E_{x ~ N(m, v)}[f(x)] by Gauss-Hermite quadrature.
inline double gaussian_expectation(const std::function<double(double)>& f,
                                   double m, double v, int n = 64) {
  std::vector<double> nodes;
  std::vector<double> weights;
  gauss_hermite(n, nodes, weights);
  const double scale = std::sqrt(2.0 * v);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    total += weights[i] * f(m + scale * nodes[i]);
  }
  return total / std::sqrt(std::numbers::pi);
}

inline ncnes::SearchDistribution random_distribution(ncnes::rng::Stream& s,
                                                     int dim,
                                                     double mean_span = 3.0,
                                                     double var_lo = 0.3,
                                                     double var_hi = 3.0) {
  ncnes::SearchDistribution dist;
  dist.mean.resize(dim);
  dist.variance.resize(dim);
  for (int d = 0; d < dim; ++d) {
    dist.mean[d] = s.uniform(-mean_span, mean_span);
    dist.variance[d] = s.uniform(var_lo, var_hi);
  }
  return dist;
}

}  // namespace oracle

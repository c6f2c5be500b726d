#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "atlas/core.hpp"

namespace atlas::stats {

/// log Gamma(x) for x > 0 (Lanczos, g = 7, nine terms; ~15 digits).
inline double lngamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw InvalidInput("lngamma: x must be positive");
  if (x == 1.0 || x == 2.0) return 0.0;
  if (x < 0.5) {
    // Reflection keeps the approximation in its accurate range.
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - lngamma(1.0 - x);
  }
  static constexpr std::array<double, 9> c{
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  const double z = x - 1.0;
  double sum = c[0];
  for (int k = 1; k < 9; ++k) sum += c[k] / (z + k);
  const double t = z + 7.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(sum);
}

/// Regularized lower incomplete gamma P(shape, x), i.e. the Gamma(shape, 1)
/// CDF. Power series below shape + 1, Lentz continued fraction above.
inline double reg_incomplete_gamma(double shape, double x) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw InvalidInput("reg_incomplete_gamma: shape must be positive");
  }
  if (!(x >= 0.0)) throw InvalidInput("reg_incomplete_gamma: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  constexpr double eps = 1e-16;
  constexpr int max_iter = 100000;
  const double log_prefactor = -x + shape * std::log(x) - lngamma(shape);
  if (x < shape + 1.0) {
    double ap = shape;
    double del = 1.0 / shape;
    double sum = del;
    for (int n = 0; n < max_iter; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * eps) break;
    }
    return std::min(1.0, sum * std::exp(log_prefactor));
  }
  constexpr double tiny = std::numeric_limits<double>::min() / eps;
  double b = x + 1.0 - shape;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < max_iter; ++i) {
    const double an = -i * (i - shape);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return std::max(0.0, 1.0 - std::exp(log_prefactor) * h);
}

/// Survival function of the Kolmogorov distribution, P(K > lambda).
inline double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // Theta-function form converges fast for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double j = 2.0 * k - 1.0;
      cdf += std::exp(-j * j * pi2 / (8.0 * lambda * lambda));
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// lambda with kolmogorov_survival(lambda) = alpha, by bisection.
inline double kolmogorov_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("kolmogorov_quantile: alpha in (0, 1)");
  double lo = 0.0;
  double hi = 10.0;
  for (int k = 0; k < 200 && hi - lo > 1e-14; ++k) {
    const double mid = 0.5 * (lo + hi);
    (kolmogorov_survival(mid) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double exponential_cdf(double rate, double x) {
  return x <= 0.0 ? 0.0 : -std::expm1(-rate * x);
}

inline double gamma_cdf(double shape, double x) {
  return x <= 0.0 ? 0.0 : reg_incomplete_gamma(shape, x);
}

}  // namespace atlas::stats

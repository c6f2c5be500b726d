#pragma once

// Exact samplers for the Poisson point process P_a (intensity a*exp(a*x)dx),
// its restriction to (-inf, zeta], the tilted law Q_a, and the product gap
// laws pi_a and pi.
//
// P_a is built through the exponential map: if T_1 < T_2 < ... are arrival
// times of a unit-rate Poisson process, then log(T_k)/a are the ranked points
// of P_a. The tilt exp(2*gamma*X_(1)) equals T_1^(2*gamma/a), which depends on
// T_1 alone, so Q_a only changes the law of T_1 (Exp(1) -> Gamma(alpha, 1))
// and keeps the Exp(1) increments.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <boost/random/poisson_distribution.hpp>

#include "atlas/core.hpp"
#include "atlas/rng.hpp"

namespace atlas {

inline double sample_exponential(double rate, RngStream& rng) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw InvalidInput("sample_exponential: rate must be positive and finite");
  }
  return -std::log(rng.uniform_open()) / rate;
}

/// Standard Gamma(shape, 1). Marsaglia-Tsang for shape >= 1; for shape < 1
/// a Gamma(shape + 1) draw is scaled by U^(1/shape).
inline double sample_gamma(double shape, RngStream& rng) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw InvalidInput("sample_gamma: shape must be positive and finite");
  }
  if (shape < 1.0) {
    const double g = sample_gamma(shape + 1.0, rng);
    return g * std::exp(std::log(rng.uniform_open()) / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z = 0.0;
    double v = 0.0;
    do {
      z = rng.normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    const double z2 = z * z;
    if (u < 1.0 - 0.0331 * z2 * z2) return d * v;
    if (std::log(u) < 0.5 * z2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

namespace detail {

inline void require_count(std::size_t m, const char* op) {
  if (m == 0) throw InvalidInput(std::string(op) + ": count must be >= 1");
}

inline RankedConfiguration points_from_arrivals(double first, std::size_t m,
                                                double a, RngStream& rng) {
  std::vector<double> x(m);
  double t = first;
  for (std::size_t k = 0; k < m; ++k) {
    if (k > 0) t += sample_exponential(1.0, rng);
    x[k] = std::log(t) / a;
  }
  return RankedConfiguration::from_sorted(std::move(x));
}

}  // namespace detail

/// The m lowest points of P_a.
inline RankedConfiguration sample_P_a(const ModelParams& params, std::size_t m,
                                      RngStream& rng) {
  require_valid(params);
  detail::require_count(m, "sample_P_a");
  const double t1 = sample_exponential(1.0, rng);
  return detail::points_from_arrivals(t1, m, params.a, rng);
}

/// P_a restricted to (-inf, zeta]: N ~ Pois(exp(a*zeta)) points zeta - Y_i,
/// Y_i ~ Exp(a). Labels follow draw order. May be empty.
inline RankedConfiguration sample_P_a_restricted(const ModelParams& params,
                                                 double zeta, RngStream& rng) {
  require_valid(params);
  if (!std::isfinite(zeta)) {
    throw InvalidInput("sample_P_a_restricted: zeta must be finite");
  }
  const double mean = std::exp(params.a * zeta);
  if (mean > 1e9) {
    throw InvalidInput("sample_P_a_restricted: exp(a*zeta) too large (> 1e9 points)");
  }
  std::size_t count = 0;
  if (mean > 0.0) {
    boost::random::poisson_distribution<long long, double> pois(mean);
    count = static_cast<std::size_t>(pois(rng));
  }
  LabeledConfiguration x;
  x.positions.resize(count);
  for (auto& v : x.positions) v = zeta - sample_exponential(params.a, rng);
  return rank(x);
}

/// The m lowest points under the tilted law Q_a.
inline RankedConfiguration sample_Q_a(const ModelParams& params, std::size_t m,
                                      RngStream& rng) {
  require_valid(params);
  detail::require_count(m, "sample_Q_a");
  const double t1 = sample_gamma(params.alpha(), rng);
  return detail::points_from_arrivals(t1, m, params.a, rng);
}

/// m independent gaps, the i-th (1-based) distributed Exp(2*gamma + i*a).
inline GapVector sample_pi_a_gaps(const ModelParams& params, std::size_t m,
                                  RngStream& rng) {
  require_valid(params);
  GapVector z;
  z.values.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    z.values[i] = sample_exponential(params.gap_rate(i + 1), rng);
  }
  return z;
}

/// m i.i.d. Exp(2*gamma) gaps; only defined for gamma > 0.
inline GapVector sample_pi_gaps(double gamma, std::size_t m, RngStream& rng) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InvalidInput("pi requires gamma > 0");
  }
  GapVector z;
  z.values.resize(m);
  for (auto& v : z.values) v = sample_exponential(2.0 * gamma, rng);
  return z;
}

/// Descending order statistics of n i.i.d. Exp(a) variables via partial sums
/// Y_(k) = G_k + ... + G_n with independent G_i ~ Exp(i*a). Entry 0 is the
/// largest.
inline std::vector<double> renyi_ranked_exponentials(std::size_t n, double a,
                                                     RngStream& rng) {
  if (n == 0) throw InvalidInput("renyi_ranked_exponentials: n must be >= 1");
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw InvalidInput("renyi_ranked_exponentials: a must be positive");
  }
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = sample_exponential(static_cast<double>(i + 1) * a, rng);
  }
  std::vector<double> y(n);
  double acc = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    acc += g[k];
    y[k] = acc;
  }
  return y;
}

}  // namespace atlas

#pragma once

// Goodness-of-fit and moment tests producing StatReport values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "atlas/core.hpp"
#include "atlas/stats/report.hpp"
#include "atlas/stats/special.hpp"

namespace atlas::stats {

inline constexpr double default_alpha = 0.01;
inline constexpr double batched_alpha = 0.001;

struct MeanAndError {
  double mean = 0.0;
  double std_error = 0.0;
  double std_dev = 0.0;
};

inline MeanAndError mean_and_error(std::span<const double> xs) {
  if (xs.empty()) throw InvalidInput("mean_and_error: empty sample");
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  const double sd = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return {mean, sd / std::sqrt(n), sd};
}

/// One-sample Kolmogorov-Smirnov test. D is taken on both sides of every
/// jump; the p-value uses the asymptotic Kolmogorov law of sqrt(N) D.
inline StatReport ks_test(std::span<const double> sample,
                          const std::function<double(double)>& cdf,
                          double alpha = default_alpha, std::string name = "ks") {
  if (sample.empty()) throw InvalidInput("ks_test: empty sample");
  std::vector<double> xs(sample.begin(), sample.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n));
  }
  StatReport r;
  r.name = std::move(name);
  r.statistic = d;
  r.p_value = kolmogorov_survival(std::sqrt(n) * d);
  r.n_samples = xs.size();
  r.rule = "KS p >= " + std::to_string(alpha);
  r.verdict = r.p_value >= alpha ? Verdict::pass : Verdict::fail;
  return r;
}

/// Two-sample Kolmogorov-Smirnov test with effective size n1 n2 / (n1 + n2).
inline StatReport ks_two_sample(std::span<const double> a, std::span<const double> b,
                                double alpha = default_alpha, std::string name = "ks2") {
  if (a.empty() || b.empty()) throw InvalidInput("ks_two_sample: empty sample");
  std::vector<double> xa(a.begin(), a.end());
  std::vector<double> xb(b.begin(), b.end());
  std::sort(xa.begin(), xa.end());
  std::sort(xb.begin(), xb.end());
  const double na = static_cast<double>(xa.size());
  const double nb = static_cast<double>(xb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < xa.size() && j < xb.size()) {
    const double v = std::min(xa[i], xb[j]);
    while (i < xa.size() && xa[i] == v) ++i;
    while (j < xb.size() && xb[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  StatReport r;
  r.name = std::move(name);
  r.statistic = d;
  r.p_value = kolmogorov_survival(std::sqrt(na * nb / (na + nb)) * d);
  r.n_samples = xa.size() + xb.size();
  r.rule = "KS2 p >= " + std::to_string(alpha);
  r.verdict = r.p_value >= alpha ? Verdict::pass : Verdict::fail;
  return r;
}

/// |mean - target| <= k * SE.
inline StatReport mean_test(std::span<const double> sample, double target, double k = 3.0,
                            std::string name = "mean") {
  const MeanAndError m = mean_and_error(sample);
  StatReport r;
  r.name = std::move(name);
  r.estimate = m.mean;
  r.std_error = m.std_error;
  r.target = target;
  r.statistic = m.std_error > 0.0 ? (m.mean - target) / m.std_error : 0.0;
  r.n_samples = sample.size();
  r.rule = "|estimate - target| <= " + std::to_string(k) + " SE";
  r.verdict = std::fabs(m.mean - target) <= k * m.std_error ? Verdict::pass : Verdict::fail;
  return r;
}

/// Two estimates agree within k combined standard errors.
inline StatReport agreement_test(double est_a, double se_a, double est_b, double se_b,
                                 std::size_t n, double k = 3.0, std::string name = "agreement") {
  StatReport r;
  r.name = std::move(name);
  r.estimate = est_a;
  r.target = est_b;
  r.std_error = std::sqrt(se_a * se_a + se_b * se_b);
  r.statistic = r.std_error > 0.0 ? (est_a - est_b) / r.std_error : 0.0;
  r.n_samples = n;
  r.rule = "|a - b| <= " + std::to_string(k) + " combined SE";
  r.verdict = std::fabs(est_a - est_b) <= k * r.std_error ? Verdict::pass : Verdict::fail;
  return r;
}

struct CorrelationEstimate {
  double r = 0.0;
  double std_error = 0.0;  ///< (1 - r^2) / sqrt(N)
};

inline CorrelationEstimate sample_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) {
    throw InvalidInput("sample_correlation: need equal sizes >= 3");
  }
  const MeanAndError mx = mean_and_error(x);
  const MeanAndError my = mean_and_error(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx.mean) * (y[i] - my.mean);
    sxx += (x[i] - mx.mean) * (x[i] - mx.mean);
    syy += (y[i] - my.mean) * (y[i] - my.mean);
  }
  CorrelationEstimate c;
  c.r = sxy / std::sqrt(sxx * syy);
  c.std_error = (1.0 - c.r * c.r) / std::sqrt(static_cast<double>(x.size()));
  return c;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidInput("least_squares: need at least two points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidInput("least_squares: degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.points = x.size();
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - f.intercept - f.slope * x[i];
      rss += e * e;
    }
    f.slope_std_error = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return f;
}

}  // namespace atlas::stats

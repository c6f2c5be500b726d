#include "atlas/stats/special.hpp"
#include "atlas/stats/tests.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "atlas/rng.hpp"
#include "atlas/samplers.hpp"

namespace atlas::stats {
namespace {

TEST(LnGamma, ClassicalValues) {
  EXPECT_NEAR(lngamma(1.0), 0.0, 1e-14);
  EXPECT_NEAR(lngamma(2.0), 0.0, 1e-14);
  EXPECT_NEAR(lngamma(0.5), 0.5723649429247001, 1e-12);
  EXPECT_NEAR(lngamma(5.0), std::log(24.0), 1e-12);
  EXPECT_THROW(lngamma(0.0), InvalidInput);
  EXPECT_THROW(lngamma(-1.5), InvalidInput);
}

TEST(LnGamma, TenDigitsAgainstStdLgamma) {
  for (double x = 0.01; x < 200.0; x *= 1.07) {
    const double want = std::lgamma(x);
    EXPECT_NEAR(lngamma(x), want, 1e-10 * std::max(1.0, std::fabs(want))) << x;
  }
}

TEST(IncompleteGamma, ShapeOneIsExponentialCdf) {
  for (int k = 0; k < 100; ++k) {
    const double x = 0.1 * k;
    EXPECT_NEAR(reg_incomplete_gamma(1.0, x), 1.0 - std::exp(-x), 1e-10);
  }
}

TEST(IncompleteGamma, LimitsAndClosedForm) {
  EXPECT_EQ(reg_incomplete_gamma(2.5, 0.0), 0.0);
  EXPECT_NEAR(reg_incomplete_gamma(2.5, 1e3), 1.0, 1e-15);
  EXPECT_NEAR(reg_incomplete_gamma(2.0, 2.0), 1.0 - 3.0 * std::exp(-2.0), 1e-12);
  EXPECT_NEAR(reg_incomplete_gamma(2.0, 2.0), 0.59399, 1e-5);
  EXPECT_THROW(reg_incomplete_gamma(0.0, 1.0), InvalidInput);
  EXPECT_THROW(reg_incomplete_gamma(1.0, -1.0), InvalidInput);
}

TEST(IncompleteGamma, AgreesWithBoostAndIsMonotone) {
  for (double shape : {0.3, 0.5, 1.7, 2.0, 5.0, 30.0}) {
    double prev = 0.0;
    for (double x = 0.0; x < 80.0; x += 0.37) {
      const double got = reg_incomplete_gamma(shape, x);
      EXPECT_NEAR(got, boost::math::gamma_p(shape, x), 1e-12) << shape << " " << x;
      EXPECT_GE(got, prev);
      EXPECT_LE(got, 1.0);
      prev = got;
    }
  }
}

TEST(Kolmogorov, CriticalValueAtOnePercent) {
  EXPECT_NEAR(kolmogorov_survival(1.628), 0.01, 2e-4);
  EXPECT_NEAR(kolmogorov_survival(1.358), 0.05, 5e-4);
  EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
  // Both series agree where they switch.
  EXPECT_NEAR(kolmogorov_survival(1.18 - 1e-9), kolmogorov_survival(1.18 + 1e-9), 1e-8);
}

TEST(Kolmogorov, QuantileInvertsSurvival) {
  EXPECT_NEAR(kolmogorov_quantile(0.01), 1.628, 1e-3);
  for (double alpha : {0.001, 0.01, 0.05, 0.2}) {
    EXPECT_NEAR(kolmogorov_survival(kolmogorov_quantile(alpha)), alpha, 1e-12);
  }
  EXPECT_THROW(kolmogorov_quantile(0.0), InvalidInput);
}

TEST(Kolmogorov, CriticalValueByMonteCarloUnderNull) {
  RngStream rng(1);
  constexpr std::size_t n = 1000;
  std::vector<double> scaled;
  for (int run = 0; run < 2000; ++run) {
    std::vector<double> u(n);
    for (auto& v : u) v = rng.uniform_open();
    const auto r = ks_test(u, [](double x) { return std::clamp(x, 0.0, 1.0); });
    scaled.push_back(std::sqrt(static_cast<double>(n)) * r.statistic);
  }
  std::sort(scaled.begin(), scaled.end());
  EXPECT_NEAR(scaled[static_cast<std::size_t>(0.99 * scaled.size())], 1.628, 0.12);
}

TEST(KsTest, CalibratedPassRateUnderNull) {
  RngStream rng(2);
  int passes = 0;
  for (int run = 0; run < 200; ++run) {
    std::vector<double> xs(1000);
    for (auto& v : xs) v = sample_exponential(1.5, rng);
    passes += ks_test(xs, [](double x) { return exponential_cdf(1.5, x); }).passed() ? 1 : 0;
  }
  EXPECT_GE(passes, 190);
}

TEST(KsTest, DetectsWrongRate) {
  RngStream rng(3);
  std::vector<double> xs(10000);
  for (auto& v : xs) v = sample_exponential(2.0, rng);
  const auto r = ks_test(xs, [](double x) { return exponential_cdf(4.0, x); });
  EXPECT_EQ(r.verdict, Verdict::fail);
  EXPECT_LT(r.p_value, 1e-10);
  EXPECT_THROW(ks_test(std::vector<double>{}, [](double) { return 0.0; }), InvalidInput);
}

TEST(KsTest, StatisticOnTinySample) {
  // Single point at the median: D = max(1 - 0.5, 0.5 - 0) = 0.5.
  const std::vector<double> one{0.5};
  EXPECT_DOUBLE_EQ(ks_test(one, [](double x) { return x; }).statistic, 0.5);
}

TEST(KsTwoSample, SameAndDifferentLaws) {
  RngStream rng(4);
  std::vector<double> a(5000), b(5000), c(5000);
  for (std::size_t k = 0; k < a.size(); ++k) {
    a[k] = rng.normal();
    b[k] = rng.normal();
    c[k] = rng.normal() + 0.2;
  }
  EXPECT_TRUE(ks_two_sample(a, b).passed());
  EXPECT_FALSE(ks_two_sample(a, c).passed());
  EXPECT_DOUBLE_EQ(ks_two_sample(a, a).statistic, 0.0);
}

TEST(MeanTest, ZeroErrorExactMatch) {
  const std::vector<double> ones(10, 1.0);
  const auto r = mean_test(ones, 1.0);
  EXPECT_EQ(r.std_error, 0.0);
  EXPECT_TRUE(r.passed());
  EXPECT_FALSE(mean_test(ones, 1.1).passed());
}

TEST(LeastSquares, RecoversExactLine) {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{-1, -3, -5, -7};
  const auto f = least_squares(x, y);
  EXPECT_NEAR(f.slope, -2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.slope_std_error, 0.0, 1e-14);
}

TEST(Report, OverallVerdictOrdering) {
  std::vector<StatReport> rs(3);
  rs[0].verdict = Verdict::pass;
  rs[1].verdict = Verdict::inconclusive;
  rs[2].verdict = Verdict::not_applicable;
  EXPECT_EQ(overall_verdict(rs), Verdict::inconclusive);
  rs[2].verdict = Verdict::fail;
  EXPECT_EQ(overall_verdict(rs), Verdict::fail);
  rs[2].gating = false;
  rs[1].gating = false;
  EXPECT_EQ(overall_verdict(rs), Verdict::pass);
}

}  // namespace
}  // namespace atlas::stats

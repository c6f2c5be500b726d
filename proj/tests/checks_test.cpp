#include "atlas/stats/checks.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

namespace atlas::stats {
namespace {

TEST(MomentIdentity, Targets) {
  const auto r1 = moment_identity_check({1.0, 2.0, std::nullopt}, 100000, 5.0, RngStream(1));
  EXPECT_NEAR(r1.target, 1.0, 1e-12);
  EXPECT_TRUE(r1.passed()) << r1.estimate << " +- " << r1.std_error;
  const auto r2 = moment_identity_check({-0.25, 1.0, std::nullopt}, 100000, 5.0, RngStream(2));
  EXPECT_NEAR(r2.target, std::sqrt(std::numbers::pi), 1e-10);
  EXPECT_TRUE(r2.passed()) << r2.estimate << " +- " << r2.std_error;
}

TEST(MomentIdentity, ZeroGammaIsExact) {
  const auto r = moment_identity_check({0.0, 1.3, std::nullopt}, 1000, 5.0, RngStream(3));
  EXPECT_EQ(r.estimate, 1.0);
  EXPECT_EQ(r.std_error, 0.0);
  EXPECT_TRUE(r.passed());
}

TEST(MomentIdentity, TargetInvariantUnderJointScaling) {
  for (double c : {0.5, 2.0, 7.0}) {
    const auto base = moment_identity_check({0.5, 1.0, std::nullopt}, 10, 10.0, RngStream(4));
    const auto scaled = moment_identity_check({0.5 * c, 1.0 * c, std::nullopt}, 10, 10.0, RngStream(4));
    EXPECT_DOUBLE_EQ(base.target, scaled.target);
  }
}

TEST(MomentIdentity, RejectsShallowTruncation) {
  EXPECT_THROW(moment_identity_check({0.5, 1.0, std::nullopt}, 10, 2.0, RngStream(5)), InvalidInput);
  EXPECT_THROW(moment_identity_check({-0.6, 1.0, std::nullopt}, 10, 5.0, RngStream(5)), InvalidInput);
}

SimulationConfig small_cfg(std::size_t n, std::size_t steps, double dt) {
  SimulationConfig cfg;
  cfg.n = n;
  cfg.steps = steps;
  cfg.dt = dt;
  cfg.shift = true;
  cfg.record_every = std::max<std::size_t>(1, steps / 10);
  return cfg;
}

TEST(Stationarity, ZeroHorizonIsSamplerSelfConsistency) {
  const auto reports = stationarity_check({0.5, 1.0, std::nullopt}, small_cfg(60, 0, 1e-3), 3, 5000,
                                          RngStream(6), 0.001);
  ASSERT_EQ(reports.size(), 1u + 3u + 1u + 1u);
  for (const auto& r : reports) EXPECT_TRUE(r.passed()) << r.name << " p=" << r.p_value;
  EXPECT_EQ(overall_verdict(reports), Verdict::pass);
}

TEST(Stationarity, ZeroGammaQuasiStationarity) {
  const auto reports = stationarity_check({0.0, 1.0, std::nullopt}, small_cfg(100, 50, 4e-3), 3, 3000,
                                          RngStream(7), 0.001);
  for (const auto& r : reports) EXPECT_TRUE(r.passed()) << r.name << " p=" << r.p_value;
}

TEST(Stationarity, ShortRunWithDrift) {
  const auto reports = stationarity_check({0.5, 1.0, std::nullopt}, small_cfg(100, 100, 2e-3), 3, 3000,
                                          RngStream(8), 0.001, 2);
  for (const auto& r : reports) EXPECT_TRUE(r.passed()) << r.name << " p=" << r.p_value;
}

TEST(Stationarity, DirtyTruncationIsInconclusive) {
  // Four particles cannot shield ranks 1..3 from the top over T = 1.
  const auto reports = stationarity_check({0.5, 1.0, std::nullopt}, small_cfg(5, 100, 1e-2), 3, 200,
                                          RngStream(9), 0.001);
  EXPECT_EQ(overall_verdict(reports), Verdict::inconclusive);
  for (const auto& r : reports) EXPECT_NE(r.verdict, Verdict::pass) << r.name;
}

TEST(Truncation, DirtyFractionBudget) {
  // alpha = 0.001, N = 2e4: budget 0.1 * 1.9495 / sqrt(2e4), i.e. 27 replicas.
  std::vector<detail::ReplicaObservables> obs(20000);
  for (std::size_t k = 0; k < 27; ++k) obs[k].clean = false;
  EXPECT_EQ(detail::truncation_report(obs, 0.001).verdict, Verdict::pass);
  obs[27].clean = false;
  EXPECT_EQ(detail::truncation_report(obs, 0.001).verdict, Verdict::inconclusive);
  std::vector<detail::ReplicaObservables> one(1);
  one[0].clean = false;
  EXPECT_EQ(detail::truncation_report(one, 0.001).verdict, Verdict::inconclusive);
}

TEST(Stationarity, RefinedRunGatesOnFineStep) {
  const auto reports = stationarity_check_refined({0.5, 1.0, std::nullopt}, small_cfg(40, 10, 4e-3), 2,
                                                  500, RngStream(10), 0.001);
  std::size_t gating = 0;
  for (const auto& r : reports) gating += r.gating ? 1 : 0;
  EXPECT_EQ(gating, reports.size() / 2);
}

TEST(Stationarity, ThreadCountDoesNotChangeResults) {
  const auto a = stationarity_check({0.5, 1.0, std::nullopt}, small_cfg(30, 20, 1e-3), 2, 200,
                                    RngStream(11), 0.001, 1);
  const auto b = stationarity_check({0.5, 1.0, std::nullopt}, small_cfg(30, 20, 1e-3), 2, 200,
                                    RngStream(11), 0.001, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(std::memcmp(&a[i].statistic, &b[i].statistic, sizeof(double)), 0);
    EXPECT_EQ(std::memcmp(&a[i].estimate, &b[i].estimate, sizeof(double)), 0);
  }
}

TEST(PalPitman, ZeroHorizonAndShortRun) {
  SimulationConfig cfg = small_cfg(60, 0, 1e-3);
  for (const auto& r : pal_pitman_check(1.0, cfg, 3, 3000, RngStream(12))) EXPECT_TRUE(r.passed()) << r.name;
  cfg = small_cfg(100, 100, 2e-3);
  for (const auto& r : pal_pitman_check(1.0, cfg, 3, 3000, RngStream(13))) EXPECT_TRUE(r.passed()) << r.name;
  EXPECT_THROW(pal_pitman_check(0.0, cfg, 3, 10, RngStream(0)), InvalidInput);
}

TEST(TailBound, SlopeCriterionSmallScale) {
  SimulationConfig cfg = small_cfg(64, 100, 5e-3);
  std::vector<double> grid;
  for (double xi = 0.0; xi <= 5.0; xi += 0.25) grid.push_back(xi);
  const auto r = tail_bound_check({0.5, 1.0, std::nullopt}, cfg, grid, 20000, RngStream(14));
  EXPECT_DOUBLE_EQ(r.target, -1.0);
  EXPECT_TRUE(r.passed()) << r.estimate;
}

TEST(TailBound, TooFewExceedancesIsInconclusive) {
  const std::vector<double> grid{1.0, 2.0, 3.0};
  const auto r = tail_bound_check({0.5, 1.0, std::nullopt}, small_cfg(16, 10, 1e-2), grid, 20, RngStream(15));
  EXPECT_EQ(r.verdict, Verdict::inconclusive);
  const std::vector<double> bad{2.0, 1.0};
  EXPECT_THROW(tail_bound_check({0.5, 1.0, std::nullopt}, small_cfg(16, 10, 1e-2), bad, 20, RngStream(15)),
               InvalidInput);
}

}  // namespace
}  // namespace atlas::stats

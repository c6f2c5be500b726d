#include "atlas/girsanov.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "atlas/stats/tests.hpp"

namespace atlas {
namespace {

SimulationConfig path_cfg(std::size_t n, std::size_t steps, double dt, bool shift = true) {
  SimulationConfig cfg;
  cfg.n = n;
  cfg.steps = steps;
  cfg.dt = dt;
  cfg.shift = shift;
  return cfg;
}

std::vector<WeightedPath> paths(const LabeledConfiguration& init, const SimulationConfig& cfg,
                                const ModelParams& p, std::size_t count, std::uint64_t seed) {
  std::vector<WeightedPath> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    RngStream rng(seed, k);
    out.push_back(weighted_driftless_path(init, cfg, p, rng));
  }
  return out;
}

TEST(WeightedPath, ZeroGammaHasUnitWeight) {
  RngStream rng(1);
  const auto w = weighted_driftless_path({{0.0, 0.5, 1.0}}, path_cfg(3, 100, 0.01),
                                         {0.0, 1.0, std::nullopt}, rng);
  EXPECT_EQ(w.log_weight, 0.0);
  EXPECT_EQ(w.weight(), 1.0);
}

TEST(WeightedPath, HardQuadraticVariationIsDeterministic) {
  const ModelParams p{0.7, 1.0, std::nullopt};
  const SimulationConfig cfg = path_cfg(3, 500, 1e-3);
  for (const auto& w : paths({{0.0, 0.2, 0.4}}, cfg, p, 50, 2)) {
    EXPECT_NEAR(w.quadratic_variation, 0.49 * 0.5, 1e-12);
    EXPECT_DOUBLE_EQ(w.log_weight, w.martingale_part - 0.5 * w.quadratic_variation);
    EXPECT_GT(w.weight(), 0.0);
  }
}

TEST(WeightedPath, MollifiedQuadraticVariationBounded) {
  const ModelParams p{0.7, 1.0, std::nullopt};
  SimulationConfig cfg = path_cfg(3, 500, 1e-3);
  cfg.scheme = MollifiedDrift{5.0};
  for (const auto& w : paths({{0.0, 0.0, 0.1}}, cfg, p, 50, 3)) {
    EXPECT_LE(w.quadratic_variation, 3 * 0.49 * 0.5 + 1e-12);
    EXPECT_LE(w.quadratic_variation, 0.49 * 0.5 + 1e-12);  // sum of squares <= square of sum
  }
}

TEST(WeightedPath, DriftlessTerminalHasShiftedMean) {
  const ModelParams p{0.7, 2.0, std::nullopt};
  std::vector<double> x0;
  for (const auto& w : paths({{1.0}}, path_cfg(1, 50, 0.01), p, 20000, 4)) x0.push_back(w.terminal.positions[0]);
  const auto m = stats::mean_and_error(x0);
  EXPECT_NEAR(m.mean, 1.0 + 0.5 * 2.0 * 0.5, 3.0 * m.std_error);
}

TEST(Importance, UnitMeanWeight) {
  const ModelParams p{0.7, 1.0, std::nullopt};
  const auto ps = paths({{0.0, 0.3, 0.8}}, path_cfg(3, 50, 0.01), p, 20000, 5);
  const auto rep = importance_estimate([](std::span<const double>) { return 1.0; }, 1, ps);
  EXPECT_NEAR(rep.estimate, 1.0, 3.0 * rep.std_error);
  EXPECT_EQ(rep.verdict, Verdict::not_applicable);
}

TEST(Importance, FourthMomentOfWeight) {
  const ModelParams p{0.5, 1.0, std::nullopt};
  const auto ps = paths({{0.0, 0.3, 0.8}}, path_cfg(3, 50, 0.01), p, 100000, 6);
  const auto rep = importance_estimate([](std::span<const double>) { return 1.0; }, 1, ps, 4.0);
  const double target = std::exp(6.0 * 0.25 * 0.5);
  EXPECT_LT(std::fabs(rep.estimate - target) / target, 0.2);
}

TEST(Importance, MatchesDirectSimulation) {
  const ModelParams p{0.7, 1.0, std::nullopt};
  const LabeledConfiguration init{{0.0, 0.3, 0.8}};
  const SimulationConfig cfg = path_cfg(3, 50, 0.01);
  const auto indicator = [](std::span<const double> low) { return low[0] <= 0.0 ? 1.0 : 0.0; };
  const auto ps = paths(init, cfg, p, 20000, 7);
  const auto is = importance_estimate(indicator, 1, ps);
  std::vector<double> direct(20000);
  for (std::size_t r = 0; r < direct.size(); ++r) {
    RngStream rng(8, r);
    const std::vector<double> low{simulate(init, cfg, p, rng).snapshots.back().sorted[0]};
    direct[r] = indicator(low);
  }
  const auto d = stats::mean_and_error(direct);
  EXPECT_NEAR(is.estimate, d.mean, 3.0 * std::hypot(is.std_error, d.std_error));
}

TEST(Importance, EffectiveSampleSizeApproachesN) {
  const ModelParams p{0.01, 1.0, std::nullopt};
  const auto ps = paths({{0.0, 0.3}}, path_cfg(2, 50, 0.01), p, 2000, 9);
  const auto rep = importance_estimate([](std::span<const double>) { return 1.0; }, 1, ps);
  ASSERT_EQ(rep.extras.front().first, "ess");
  EXPECT_GT(rep.extras.front().second / 2000.0, 0.999);
}

TEST(Importance, SurvivesHugeLogWeights) {
  std::vector<WeightedPath> ps(2);
  ps[0].terminal = {{0.0}};
  ps[1].terminal = {{0.0}};
  ps[0].log_weight = 800.0;
  ps[1].log_weight = 800.0;
  const auto rep = importance_estimate([](std::span<const double>) { return 1.0; }, 1, ps, 0.5);
  EXPECT_NEAR(rep.estimate, std::exp(400.0), std::exp(400.0) * 1e-12);
}

TEST(Importance, RejectsEmpty) {
  std::vector<WeightedPath> none;
  EXPECT_THROW(importance_estimate([](std::span<const double>) { return 1.0; }, 1, none), InvalidInput);
}

TEST(WeightRatio, ZeroGammaIsExact) {
  const std::vector<double> betas{10, 20, 40};
  const auto rep = weight_ratio_diagnostic({{0.0, 0.0, 0.1}}, path_cfg(3, 100, 0.005),
                                           {0.0, 1.0, std::nullopt}, betas, 200, RngStream(10));
  for (double ms : rep.mean_square) EXPECT_EQ(ms, 0.0);
}

TEST(WeightRatio, WidelySeparatedStartIsNearZero) {
  const std::vector<double> betas{20.0};
  const auto rep = weight_ratio_diagnostic({{0.0, 6.0, 12.0}}, path_cfg(3, 100, 0.005),
                                           {0.7, 1.0, std::nullopt}, betas, 500, RngStream(11));
  EXPECT_LT(rep.mean_square[0], 1e-8);
}

TEST(WeightRatio, DecreasesAlongBetaOnNearTieStart) {
  const std::vector<double> betas{10, 20, 40, 80, 160, 320};
  const auto rep = weight_ratio_diagnostic({{0.0, 0.01, 0.5}}, path_cfg(3, 100, 0.005),
                                           {0.7, 1.0, std::nullopt}, betas, 2000, RngStream(12));
  EXPECT_TRUE(rep.non_increasing());
  EXPECT_LT(rep.mean_square.back(), rep.mean_square.front());
}

TEST(WeightRatio, RejectsUnsortedSchedule) {
  const std::vector<double> betas{20, 10};
  EXPECT_THROW(weight_ratio_diagnostic({{0.0, 1.0}}, path_cfg(2, 1, 0.01), {0.7, 1.0, std::nullopt},
                                       betas, 1, RngStream(0)),
               InvalidInput);
}

}  // namespace
}  // namespace atlas

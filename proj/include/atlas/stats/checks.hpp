#pragma once

// Monte Carlo verification procedures for the stationary law Q_a, the
// normalization identity, the Pal-Pitman gap law, and the Atlas tail bound.
// Each replica r draws from rng.split(r); results are reduced in replica
// order, so verdicts depend only on (seed, configuration).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "atlas/core.hpp"
#include "atlas/dynamics.hpp"
#include "atlas/parallel.hpp"
#include "atlas/rng.hpp"
#include "atlas/samplers.hpp"
#include "atlas/stats/report.hpp"
#include "atlas/stats/special.hpp"
#include "atlas/stats/tests.hpp"

namespace atlas::stats {

/// MC estimate of E_{P_a}[exp(2 gamma X_(1)) 1{X_(1) <= zeta}] against
/// Gamma(2 gamma / a + 1). Requires P(N(zeta) = 0) < 1e-6.
inline StatReport moment_identity_check(const ModelParams& params, std::size_t n_draws,
                                        double zeta, RngStream rng) {
  require_valid(params);
  if (n_draws < 2) throw InvalidInput("moment_identity_check: need at least 2 draws");
  if (!(std::exp(params.a * zeta) > -std::log(1e-6))) {
    throw InvalidInput("moment_identity_check: zeta too small, P(N(zeta)=0) >= 1e-6");
  }
  std::vector<double> values(n_draws);
  for (auto& v : values) {
    const double x1 = sample_P_a(params, 1, rng).sorted.front();
    v = x1 <= zeta ? std::exp(2.0 * params.gamma * x1) : 0.0;
  }
  StatReport r = mean_test(values, std::exp(lngamma(params.alpha())), 3.0,
                           "E[exp(2 gamma X(1))] = Gamma(2 gamma/a + 1)");
  r.extras.emplace_back("zeta", zeta);
  return r;
}

namespace detail {

struct ReplicaObservables {
  double x1_start = 0.0;
  double x1_end = 0.0;
  std::vector<double> gaps_end;
  bool clean = true;
};

/// Replacing a fraction f of the replicas moves any empirical CDF by at most
/// f, so dirty replicas are tolerated while f stays below a tenth of the KS
/// critical distance at (alpha, N).
inline StatReport truncation_report(std::span<const ReplicaObservables> obs, double alpha) {
  std::size_t dirty = 0;
  for (const auto& o : obs) dirty += o.clean ? 0 : 1;
  const double n = static_cast<double>(obs.size());
  const double budget = 0.1 * kolmogorov_quantile(alpha) / std::sqrt(n);
  StatReport r;
  r.name = "truncation diagnostic clean";
  r.estimate = static_cast<double>(dirty) / n;
  r.target = budget;
  r.n_samples = obs.size();
  r.rule = "dirty fraction <= 0.1 * KS critical distance";
  r.verdict = r.estimate <= budget ? Verdict::pass : Verdict::inconclusive;
  r.extras.emplace_back("dirty_replicas", static_cast<double>(dirty));
  return r;
}

/// Under a dirty truncation no verdict is trustworthy, pass or fail.
inline void downgrade_if_dirty(std::vector<StatReport>& reports) {
  bool dirty = false;
  for (const auto& r : reports) {
    if (r.name == "truncation diagnostic clean" && r.verdict != Verdict::pass) dirty = true;
  }
  if (!dirty) return;
  for (auto& r : reports) {
    if (r.verdict == Verdict::pass || r.verdict == Verdict::fail) r.verdict = Verdict::inconclusive;
  }
}

inline std::vector<double> column(std::span<const ReplicaObservables> obs, std::size_t i) {
  std::vector<double> out(obs.size());
  for (std::size_t k = 0; k < obs.size(); ++k) out[k] = obs[k].gaps_end[i];
  return out;
}

inline std::size_t default_record_every(const SimulationConfig& cfg) {
  return std::max<std::size_t>(1, cfg.steps / 10);
}

}  // namespace detail

/// Starts each replica from an exact Q_a draw truncated to cfg.n points, runs
/// the compensated dynamics to T = cfg.steps * cfg.dt and tests
///   (i)   exp(a Xbar_(1)(T)) ~ Gamma(2 gamma/a + 1, 1),
///   (ii)  Z_i(T) ~ Exp(2 gamma + i a), i = 1..m,
///   (iii) E[Xbar_(1)(T) - Xbar_(1)(0)] = 0 within 3 SE (paired),
/// plus the truncation diagnostic for ranks 1..m+1.
inline std::vector<StatReport> stationarity_check(const ModelParams& params,
                                                  SimulationConfig cfg, std::size_t m,
                                                  std::size_t replicas, const RngStream& rng,
                                                  double alpha = batched_alpha,
                                                  unsigned threads = 1) {
  require_valid(params);
  validate(cfg);
  if (params.ranked_drifts) throw InvalidInput("stationarity_check: single Atlas drift only");
  if (m < 1 || m + 1 >= cfg.n) throw InvalidInput("stationarity_check: need 1 <= m < n - 1");
  if (replicas < 2) throw InvalidInput("stationarity_check: need at least 2 replicas");
  const double compensation = cfg.shift ? 0.0 : 0.5 * params.a * cfg.horizon();
  const auto obs = map_replicas(replicas, threads, [&](std::size_t r) {
    RngStream stream = rng.split(r);
    const LabeledConfiguration init = sample_Q_a(params, cfg.n, stream).labeled();
    const TrajectoryRecord rec = simulate(init, cfg, params, stream);
    detail::ReplicaObservables o;
    const RankedConfiguration& last = rec.snapshots.back();
    o.x1_start = rec.snapshots.front().sorted.front();
    o.x1_end = last.sorted.front() + compensation;
    o.gaps_end.resize(m);
    for (std::size_t i = 0; i < m; ++i) o.gaps_end[i] = last.sorted[i + 1] - last.sorted[i];
    o.clean = truncation_diagnostic(rec, m + 1).clean;
    return o;
  });

  std::vector<StatReport> reports;
  const double shape = params.alpha();
  std::vector<double> e1(replicas);
  std::vector<double> drift(replicas);
  for (std::size_t k = 0; k < replicas; ++k) {
    e1[k] = std::exp(params.a * obs[k].x1_end);
    drift[k] = obs[k].x1_end - obs[k].x1_start;
  }
  reports.push_back(ks_test(e1, [shape](double x) { return gamma_cdf(shape, x); }, alpha,
                            "exp(a X(1)(T)) ~ Gamma(" + std::to_string(shape) + ",1)"));
  for (std::size_t i = 0; i < m; ++i) {
    const double rate = params.gap_rate(i + 1);
    reports.push_back(ks_test(detail::column(obs, i),
                              [rate](double x) { return exponential_cdf(rate, x); }, alpha,
                              "Z_" + std::to_string(i + 1) + "(T) ~ Exp(" + std::to_string(rate) + ")"));
  }
  reports.push_back(mean_test(drift, 0.0, 3.0, "E[X(1)(T)] = E[X(1)(0)] (paired)"));
  reports.push_back(detail::truncation_report(obs, alpha));
  detail::downgrade_if_dirty(reports);
  return reports;
}

/// Runs stationarity_check at cfg.dt (non-gating) and cfg.dt / 4 with four
/// times the steps (gating). Only the refined run decides the verdict.
inline std::vector<StatReport> stationarity_check_refined(const ModelParams& params,
                                                          const SimulationConfig& cfg,
                                                          std::size_t m, std::size_t replicas,
                                                          const RngStream& rng,
                                                          double alpha = batched_alpha,
                                                          unsigned threads = 1) {
  std::vector<StatReport> out = stationarity_check(params, cfg, m, replicas, rng.split(0), alpha, threads);
  for (auto& r : out) {
    r.gating = false;
    r.name += " [dt]";
  }
  SimulationConfig fine = cfg;
  fine.dt = cfg.dt / 4.0;
  fine.steps = cfg.steps * 4;
  fine.record_every = cfg.record_every * 4;
  auto refined = stationarity_check(params, fine, m, replicas, rng.split(1), alpha, threads);
  for (auto& r : refined) {
    r.name += " [dt/4]";
    out.push_back(std::move(r));
  }
  return out;
}

/// Pal-Pitman baseline: Atlas particle at 0, n - 1 i.i.d. Exp(2 gamma) gaps,
/// no compensation shift; tests Z_i(T) ~ Exp(2 gamma), i = 1..m.
inline std::vector<StatReport> pal_pitman_check(double gamma, SimulationConfig cfg, std::size_t m,
                                                std::size_t replicas, const RngStream& rng,
                                                double alpha = batched_alpha,
                                                unsigned threads = 1) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidInput("pi requires gamma > 0");
  cfg.shift = false;
  validate(cfg);
  if (m < 1 || m + 1 >= cfg.n) throw InvalidInput("pal_pitman_check: need 1 <= m < n - 1");
  if (replicas < 2) throw InvalidInput("pal_pitman_check: need at least 2 replicas");
  const ModelParams params{gamma, 1.0, std::nullopt};
  const auto obs = map_replicas(replicas, threads, [&](std::size_t r) {
    RngStream stream = rng.split(r);
    const GapVector z = sample_pi_gaps(gamma, cfg.n - 1, stream);
    std::vector<double> x(cfg.n, 0.0);
    for (std::size_t i = 1; i < cfg.n; ++i) x[i] = x[i - 1] + z.values[i - 1];
    const TrajectoryRecord rec = simulate(LabeledConfiguration{std::move(x)}, cfg, params, stream);
    detail::ReplicaObservables o;
    const RankedConfiguration& last = rec.snapshots.back();
    o.gaps_end.resize(m);
    for (std::size_t i = 0; i < m; ++i) o.gaps_end[i] = last.sorted[i + 1] - last.sorted[i];
    o.clean = truncation_diagnostic(rec, m + 1).clean;
    return o;
  });
  std::vector<StatReport> reports;
  const double rate = 2.0 * gamma;
  for (std::size_t i = 0; i < m; ++i) {
    reports.push_back(ks_test(detail::column(obs, i),
                              [rate](double x) { return exponential_cdf(rate, x); }, alpha,
                              "Z_" + std::to_string(i + 1) + "(T) ~ Exp(" + std::to_string(rate) + ")"));
  }
  reports.push_back(detail::truncation_report(obs, alpha));
  detail::downgrade_if_dirty(reports);
  return reports;
}

/// Survival of |X_(1)(T) + a T / 2| on xi_grid, started from X_(1)(0) = 0 with
/// pi_a gaps. Fits the log-survival slope over grid points (xi > 0) with at
/// least min_exceedances hits; passes iff slope <= -rate + 0.1 rate where
/// rate = (2 gamma + a) / 2.
inline StatReport tail_bound_check(const ModelParams& params, SimulationConfig cfg,
                                   std::span<const double> xi_grid, std::size_t replicas,
                                   const RngStream& rng, unsigned threads = 1,
                                   std::size_t min_exceedances = 50) {
  require_valid(params);
  validate(cfg);
  if (xi_grid.empty()) throw InvalidInput("tail_bound_check: empty xi grid");
  for (std::size_t k = 0; k < xi_grid.size(); ++k) {
    if (!(xi_grid[k] >= 0.0) || (k > 0 && !(xi_grid[k] > xi_grid[k - 1]))) {
      throw InvalidInput("tail_bound_check: xi grid must be nonnegative and ascending");
    }
  }
  if (replicas < 2) throw InvalidInput("tail_bound_check: need at least 2 replicas");
  const double compensation = cfg.shift ? 0.0 : 0.5 * params.a * cfg.horizon();
  const auto dev = map_replicas(replicas, threads, [&](std::size_t r) {
    RngStream stream = rng.split(r);
    std::vector<double> x(cfg.n, 0.0);
    if (cfg.n > 1) {
      const GapVector z = sample_pi_a_gaps(params, cfg.n - 1, stream);
      for (std::size_t i = 1; i < cfg.n; ++i) x[i] = x[i - 1] + z.values[i - 1];
    }
    Integrator integ(LabeledConfiguration{std::move(x)}, cfg, params);
    for (std::size_t k = 0; k < cfg.steps; ++k) integ.advance(stream);
    const auto pos = integ.positions();
    return std::fabs(*std::min_element(pos.begin(), pos.end()) + compensation);
  });
  const double rate = 0.5 * (2.0 * params.gamma + params.a);
  StatReport rep;
  rep.name = "tail slope at T=" + std::to_string(cfg.horizon());
  rep.target = -rate;
  rep.n_samples = replicas;
  rep.rule = "fitted log-survival slope <= " + std::to_string(-0.9 * rate);
  std::vector<double> fit_x;
  std::vector<double> fit_y;
  for (double xi : xi_grid) {
    const auto hits = static_cast<std::size_t>(
        std::count_if(dev.begin(), dev.end(), [xi](double d) { return d >= xi; }));
    const double surv = static_cast<double>(hits) / static_cast<double>(replicas);
    rep.extras.emplace_back("S(" + std::to_string(xi) + ")", surv);
    if (xi > 0.0 && hits >= min_exceedances) {
      fit_x.push_back(xi);
      fit_y.push_back(std::log(surv));
    }
  }
  if (fit_x.size() < 2) {
    rep.verdict = Verdict::inconclusive;
    return rep;
  }
  const LinearFit fit = least_squares(fit_x, fit_y);
  rep.estimate = fit.slope;
  rep.statistic = fit.slope;
  rep.std_error = fit.slope_std_error;
  rep.extras.emplace_back("fit_points", static_cast<double>(fit.points));
  rep.verdict = fit.slope <= -rate + 0.1 * rate ? Verdict::pass : Verdict::fail;
  return rep;
}

}  // namespace atlas::stats

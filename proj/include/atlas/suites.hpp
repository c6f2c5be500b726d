#pragma once

// Named verification suites. Each criterion draws from its own base stream
// RngStream(seed, id), so a criterion gives the same numbers whether it runs
// alone or inside "all"; only the test level changes (Bonferroni for "all").

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atlas/core.hpp"
#include "atlas/dynamics.hpp"
#include "atlas/girsanov.hpp"
#include "atlas/parallel.hpp"
#include "atlas/rng.hpp"
#include "atlas/samplers.hpp"
#include "atlas/stats/checks.hpp"
#include "atlas/stats/report.hpp"
#include "atlas/stats/special.hpp"
#include "atlas/stats/tests.hpp"

namespace atlas::suites {

struct SuiteOptions {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  /// Test level; unset means each criterion's own level.
  std::optional<double> alpha;
  /// Replaces every draw/replica/path count (smoke runs).
  std::optional<std::size_t> replicas;
  /// Particle count and step size for the simulation criteria.
  std::optional<std::size_t> n;
  std::optional<double> dt;
  /// Tail thresholds; empty means default_xi_grid().
  std::vector<double> xi_grid;
};

namespace detail {

inline std::size_t count(const SuiteOptions& o, std::size_t fallback) {
  return o.replicas.value_or(fallback);
}

inline double level(const SuiteOptions& o, double fallback) { return o.alpha.value_or(fallback); }

inline std::string params_tag(const ModelParams& p) {
  return "(a=" + std::to_string(p.a) + ", gamma=" + std::to_string(p.gamma) + ")";
}

inline void prefix(std::vector<StatReport>& reports, const std::string& tag) {
  for (auto& r : reports) r.name = tag + " " + r.name;
}

inline SimulationConfig sim_config(const SuiteOptions& o, std::size_t default_n, double default_dt,
                                   double horizon) {
  SimulationConfig cfg;
  cfg.n = o.n.value_or(default_n);
  cfg.dt = o.dt.value_or(default_dt);
  cfg.steps = static_cast<std::size_t>(std::llround(horizon / cfg.dt));
  cfg.record_every = std::max<std::size_t>(1, cfg.steps / 20);
  cfg.shift = true;
  return cfg;
}

}  // namespace detail

/// Parameter sets of the sampler criteria: (gamma, a).
inline std::vector<ModelParams> sampler_params() {
  return {{1.0, 2.0, std::nullopt}, {0.5, 1.0, std::nullopt}, {-0.25, 1.0, std::nullopt}};
}

// ---------------------------------------------------------------- sampler

/// Normalization identity E_{P_a}[exp(2 gamma X_(1))] = Gamma(2 gamma/a + 1).
inline std::vector<StatReport> normalization_identity(const SuiteOptions& o) {
  const RngStream base(o.seed, 1);
  std::vector<StatReport> out;
  std::uint64_t k = 0;
  for (const auto& p : sampler_params()) {
    StatReport r = stats::moment_identity_check(p, detail::count(o, 1'000'000), 5.0, base.split(k++));
    r.name = detail::params_tag(p) + " " + r.name;
    out.push_back(std::move(r));
  }
  return out;
}

/// Exact Q_a draws: exp(a X_(1)) ~ Gamma(2 gamma/a + 1, 1) and Z_i ~ Exp(2 gamma + i a).
inline std::vector<StatReport> qa_marginals(const SuiteOptions& o) {
  const RngStream base(o.seed, 2);
  const double alpha = detail::level(o, stats::default_alpha);
  const std::size_t draws = detail::count(o, 100'000);
  constexpr std::size_t gaps = 5;
  std::vector<StatReport> out;
  std::uint64_t k = 0;
  for (const auto& p : sampler_params()) {
    RngStream rng = base.split(k++);
    std::vector<double> e1(draws);
    std::vector<std::vector<double>> z(gaps, std::vector<double>(draws));
    for (std::size_t d = 0; d < draws; ++d) {
      const RankedConfiguration q = sample_Q_a(p, gaps + 1, rng);
      e1[d] = std::exp(p.a * q.sorted[0]);
      for (std::size_t i = 0; i < gaps; ++i) z[i][d] = q.sorted[i + 1] - q.sorted[i];
    }
    const double shape = p.alpha();
    std::vector<StatReport> block;
    block.push_back(stats::ks_test(e1, [shape](double x) { return stats::gamma_cdf(shape, x); },
                                   alpha, "exp(a X(1)) ~ Gamma(" + std::to_string(shape) + ",1)"));
    for (std::size_t i = 0; i < gaps; ++i) {
      const double rate = p.gap_rate(i + 1);
      block.push_back(stats::ks_test(z[i], [rate](double x) { return stats::exponential_cdf(rate, x); },
                                     alpha, "Z_" + std::to_string(i + 1) + " ~ Exp(" + std::to_string(rate) + ")"));
    }
    detail::prefix(block, detail::params_tag(p));
    out.insert(out.end(), block.begin(), block.end());
  }
  return out;
}

/// Renyi partial sums vs brute-force sorted i.i.d. Exp(a), per order statistic.
inline std::vector<StatReport> renyi_equivalence(const SuiteOptions& o) {
  const RngStream base(o.seed, 3);
  const double alpha = detail::level(o, stats::default_alpha);
  const std::size_t draws = detail::count(o, 10'000);
  constexpr std::size_t n = 5;
  std::vector<StatReport> out;
  std::uint64_t k = 0;
  for (double a : {1.0, 2.0}) {
    RngStream fast = base.split(k++);
    RngStream brute = base.split(k++);
    std::vector<std::vector<double>> lhs(n, std::vector<double>(draws));
    std::vector<std::vector<double>> rhs(n, std::vector<double>(draws));
    std::vector<double> iid(n);
    for (std::size_t d = 0; d < draws; ++d) {
      const auto y = renyi_ranked_exponentials(n, a, fast);
      for (auto& v : iid) v = sample_exponential(a, brute);
      std::sort(iid.begin(), iid.end(), std::greater<>());
      for (std::size_t j = 0; j < n; ++j) {
        lhs[j][d] = y[j];
        rhs[j][d] = iid[j];
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      out.push_back(stats::ks_two_sample(lhs[j], rhs[j], alpha,
                                         "(a=" + std::to_string(a) + ") Y_(" + std::to_string(j + 1) +
                                             ") renyi vs sorted i.i.d."));
    }
  }
  return out;
}

// ----------------------------------------------------------- simulations

inline std::vector<StatReport> stationarity(const SuiteOptions& o) {
  const ModelParams p{0.5, 1.0, std::nullopt};
  const SimulationConfig cfg = detail::sim_config(o, 400, 1e-3, 1.0);
  return stats::stationarity_check_refined(p, cfg, 5, detail::count(o, 20'000), RngStream(o.seed, 4),
                                           detail::level(o, stats::batched_alpha), o.threads);
}

/// Pal-Pitman gaps, run at dt (non-gating) and dt/4 (gating) like the
/// stationarity check.
inline std::vector<StatReport> pal_pitman(const SuiteOptions& o) {
  SimulationConfig cfg = detail::sim_config(o, 400, 1e-3, 1.0);
  cfg.shift = false;
  const std::size_t replicas = detail::count(o, 20'000);
  const double alpha = detail::level(o, stats::batched_alpha);
  const RngStream base(o.seed, 5);
  auto out = stats::pal_pitman_check(1.0, cfg, 3, replicas, base.split(0), alpha, o.threads);
  for (auto& r : out) {
    r.gating = false;
    r.name += " [dt]";
  }
  SimulationConfig fine = cfg;
  fine.dt /= 4.0;
  fine.steps *= 4;
  fine.record_every *= 4;
  for (auto& r : stats::pal_pitman_check(1.0, fine, 3, replicas, base.split(1), alpha, o.threads)) {
    r.name += " [dt/4]";
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<double> default_xi_grid() {
  std::vector<double> xi;
  for (int k = 2; k <= 24; ++k) xi.push_back(0.25 * k);
  return xi;
}

/// Log-survival slope of |X_(1)(T) + aT/2| at T = 0.5, 1, 2.
inline std::vector<StatReport> tail(const SuiteOptions& o) {
  const ModelParams p{0.5, 1.0, std::nullopt};
  const std::vector<double> xi_grid = o.xi_grid.empty() ? default_xi_grid() : o.xi_grid;
  const RngStream base(o.seed, 6);
  std::vector<StatReport> out;
  std::uint64_t k = 0;
  for (double horizon : {0.5, 1.0, 2.0}) {
    SimulationConfig cfg = detail::sim_config(o, 128, 2e-3, horizon);
    cfg.shift = false;
    out.push_back(stats::tail_bound_check(p, cfg, xi_grid, detail::count(o, 100'000), base.split(k++),
                                          o.threads));
  }
  return out;
}

// -------------------------------------------------------------- girsanov

struct NamedTestFunction {
  std::string name;
  RankedTestFunction fn;
};

/// Bounded functions of the three ranked positions y_1 <= y_2 <= y_3.
inline std::vector<NamedTestFunction> girsanov_test_functions() {
  return {
      {"1{y1 > 0}", [](std::span<const double> y) { return y[0] > 0.0 ? 1.0 : 0.0; }},
      {"tanh(y1)", [](std::span<const double> y) { return std::tanh(y[0]); }},
      {"exp(-(y3 - y1))", [](std::span<const double> y) { return std::exp(-(y[2] - y[0])); }},
      {"cos(y1 + y2)", [](std::span<const double> y) { return std::cos(y[0] + y[1]); }},
      {"1/(1 + y2^2)", [](std::span<const double> y) { return 1.0 / (1.0 + y[1] * y[1]); }},
  };
}

inline SimulationConfig girsanov_config() {
  SimulationConfig cfg;
  cfg.n = 3;
  cfg.dt = 1e-3;
  cfg.steps = 500;
  cfg.record_every = cfg.steps;
  cfg.shift = true;
  return cfg;
}

/// Importance-weighted driftless paths vs direct simulation; E[F] = 1 and
/// E[F^4] against exp(6 gamma^2 t).
inline std::vector<StatReport> girsanov_equivalence(const SuiteOptions& o) {
  const ModelParams p{0.7, 1.0, std::nullopt};
  const SimulationConfig cfg = girsanov_config();
  const LabeledConfiguration start{{0.0, 0.5, 1.0}};
  const std::size_t paths = detail::count(o, 100'000);
  const RngStream base(o.seed, 7);
  const RngStream direct_base = base.split(0);
  const RngStream weighted_base = base.split(1);
  const RngStream moment_base = base.split(2);

  const auto direct = map_replicas(paths, o.threads, [&](std::size_t r) {
    RngStream s = direct_base.split(r);
    Integrator integ(start, cfg, p);
    for (std::size_t k = 0; k < cfg.steps; ++k) integ.advance(s);
    auto x = integ.state().positions;
    std::sort(x.begin(), x.end());
    return x;
  });
  const auto weighted = map_replicas(paths, o.threads, [&](std::size_t r) {
    RngStream s = weighted_base.split(r);
    return weighted_driftless_path(start, cfg, p, s);
  });

  std::vector<StatReport> out;
  for (const auto& tf : girsanov_test_functions()) {
    std::vector<double> values(paths);
    for (std::size_t r = 0; r < paths; ++r) values[r] = tf.fn(direct[r]);
    const auto d = stats::mean_and_error(values);
    const StatReport w = importance_estimate(tf.fn, 3, weighted, 1.0);
    StatReport r = stats::agreement_test(w.estimate, w.std_error, d.mean, d.std_error, paths, 3.0,
                                         "E[" + tf.name + "] weighted vs direct");
    r.extras.emplace_back("ess", w.extras.front().second);
    out.push_back(std::move(r));
  }

  std::vector<double> weights(paths);
  for (std::size_t r = 0; r < paths; ++r) weights[r] = weighted[r].weight();
  out.push_back(stats::mean_test(weights, 1.0, 3.0, "E[F(t)] = 1"));

  const std::size_t moment_paths = o.replicas ? 10 * *o.replicas : 1'000'000;
  const auto f4 = map_replicas(moment_paths, o.threads, [&](std::size_t r) {
    RngStream s = moment_base.split(r);
    return std::exp(4.0 * weighted_driftless_path(start, cfg, p, s).log_weight);
  });
  const auto m4 = stats::mean_and_error(f4);
  const double target = std::exp(6.0 * p.gamma * p.gamma * cfg.horizon());
  StatReport r;
  r.name = "E[F(t)^4] = exp(6 gamma^2 t)";
  r.estimate = m4.mean;
  r.std_error = m4.std_error;
  r.target = target;
  r.statistic = (m4.mean - target) / target;
  r.n_samples = moment_paths;
  r.rule = "relative error <= 0.2";
  r.verdict = std::fabs(m4.mean - target) <= 0.2 * target ? Verdict::pass : Verdict::fail;
  out.push_back(std::move(r));
  return out;
}

inline std::vector<double> mollifier_betas() { return {10, 20, 40, 80, 160, 320}; }

/// Mean-square gap between mollified and hard weights on common noise:
/// non-increasing in beta and below 1e-3 at the sharpest beta.
inline std::vector<StatReport> mollified_convergence(const SuiteOptions& o) {
  const ModelParams p{0.7, 1.0, std::nullopt};
  const SimulationConfig cfg = girsanov_config();
  const LabeledConfiguration start{{0.0, 2.0, 4.0}};
  const auto betas = mollifier_betas();
  const WeightRatioReport w =
      weight_ratio_diagnostic(start, cfg, p, betas, detail::count(o, 10'000), RngStream(o.seed, 8));
  std::vector<StatReport> out;
  StatReport mono;
  mono.name = "E(1 - F^beta/F)^2 non-increasing in beta";
  mono.n_samples = w.n_paths;
  mono.rule = "mean square at each beta <= previous";
  mono.verdict = w.non_increasing() ? Verdict::pass : Verdict::fail;
  for (std::size_t j = 0; j < betas.size(); ++j) {
    mono.extras.emplace_back("ms(beta=" + std::to_string(static_cast<int>(betas[j])) + ")",
                             w.mean_square[j]);
  }
  out.push_back(std::move(mono));
  StatReport last;
  last.name = "E(1 - F^beta/F)^2 at beta=320";
  last.estimate = w.mean_square.back();
  last.std_error = w.std_error.back();
  last.target = 1e-3;
  last.n_samples = w.n_paths;
  last.rule = "estimate < 1e-3";
  last.verdict = w.mean_square.back() < 1e-3 ? Verdict::pass : Verdict::fail;
  out.push_back(std::move(last));
  return out;
}

// ------------------------------------------------------------ properties

/// Rank of label i by direct counting; the oracle for rank().
inline std::size_t brute_rank(std::span<const double> x, std::size_t i) {
  std::size_t r = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < x[i] || (x[j] == x[i] && j < i)) ++r;
  }
  return r;
}

inline std::vector<StatReport> properties(const SuiteOptions& o) {
  const RngStream base(o.seed, 9);
  const std::size_t cases = detail::count(o, 10'000);
  std::vector<StatReport> out;
  auto verdict_report = [&](std::string name, std::size_t failures, std::size_t n) {
    StatReport r;
    r.name = std::move(name);
    r.estimate = static_cast<double>(failures);
    r.target = 0.0;
    r.n_samples = n;
    r.rule = "zero violations";
    r.verdict = failures == 0 ? Verdict::pass : Verdict::fail;
    out.push_back(std::move(r));
  };

  {
    RngStream rng = base.split(0);
    std::size_t bad = 0;
    for (std::size_t c = 0; c < cases; ++c) {
      const std::size_t n = 1 + rng() % 12;
      // Values on a coarse grid so ties are common.
      std::vector<double> x(n);
      for (auto& v : x) v = static_cast<double>(static_cast<int>(rng() % 7) - 3) * 0.5;
      const RankedConfiguration r = rank(LabeledConfiguration{x});
      for (std::size_t i = 0; i < n; ++i) {
        if (r.rank_of[i] != brute_rank(x, i) || r.sorted[r.rank_of[i]] != x[i]) {
          ++bad;
          break;
        }
      }
    }
    verdict_report("rank() matches brute-force comparator (with ties)", bad, cases);
  }

  {
    RngStream rng = base.split(1);
    std::size_t bad_sum = 0;
    std::size_t bad_bound = 0;
    for (std::size_t c = 0; c < cases; ++c) {
      const std::size_t n = 2 + rng() % 10;
      std::vector<double> x(n);
      for (auto& v : x) v = 4.0 * rng.normal();
      if (c % 4 == 0) x[1] = x[0];
      const double g = 2.0 * rng.normal();
      const ModelParams p{g, 2.0 * std::fabs(g) + 1.0, std::nullopt};
      const double beta = std::exp(6.0 * rng.uniform_open() - 1.0);
      const LabeledConfiguration state{x};
      for (const auto& b : {atlas_drift(state, p), mollified_drift(state, p, beta)}) {
        double s = 0.0;
        for (double v : b) {
          s += v;
          if (std::fabs(v) > std::fabs(g) * (1.0 + 1e-12)) ++bad_bound;
        }
        if (std::fabs(s - g) > 1e-12 * (1.0 + std::fabs(g))) ++bad_sum;
      }
      const std::size_t m = 1 + rng() % n;
      std::vector<double> drifts(m);
      double total = 0.0;
      for (auto& d : drifts) total += (d = rng.normal());
      double s = 0.0;
      for (double v : multi_drift(state, drifts)) s += v;
      if (std::fabs(s - total) > 1e-12 * (1.0 + std::fabs(total))) ++bad_sum;
    }
    verdict_report("drift sums equal total drift", bad_sum, cases);
    verdict_report("|drift_i| <= |gamma|", bad_bound, cases);
  }

  {
    // gamma = 0: the ranked Atlas system is a sorted vector of independent
    // Brownian motions; compare the lowest two ranked positions.
    const ModelParams p{0.0, 1.0, std::nullopt};
    SimulationConfig cfg;
    cfg.n = 4;
    cfg.dt = 1e-2;
    cfg.steps = 100;
    cfg.record_every = cfg.steps;
    const LabeledConfiguration start{{0.0, 0.3, 0.6, 0.9}};
    const std::size_t reps = cases;
    RngStream sim = base.split(2);
    RngStream bm = base.split(3);
    std::vector<double> s1(reps), s2(reps), b1(reps), b2(reps);
    std::vector<double> y(cfg.n);
    for (std::size_t r = 0; r < reps; ++r) {
      Integrator integ(start, cfg, p);
      for (std::size_t k = 0; k < cfg.steps; ++k) integ.advance(sim);
      auto x = integ.state().positions;
      std::sort(x.begin(), x.end());
      s1[r] = x[0];
      s2[r] = x[1];
      for (std::size_t i = 0; i < cfg.n; ++i) y[i] = start.positions[i] + bm.normal();
      std::sort(y.begin(), y.end());
      b1[r] = y[0];
      b2[r] = y[1];
    }
    const double alpha = detail::level(o, stats::default_alpha);
    out.push_back(stats::ks_two_sample(s1, b1, alpha, "gamma=0 X(1)(1) vs sorted BM"));
    out.push_back(stats::ks_two_sample(s2, b2, alpha, "gamma=0 X(2)(1) vs sorted BM"));
  }

  {
    const ModelParams p{0.5, 1.0, std::nullopt};
    SimulationConfig cfg;
    cfg.n = 50;
    cfg.dt = 1e-3;
    cfg.steps = 200;
    cfg.record_every = 50;
    cfg.shift = true;
    auto run = [&] {
      RngStream rng(o.seed, 10);
      const LabeledConfiguration init = sample_Q_a(p, cfg.n, rng).labeled();
      return simulate(init, cfg, p, rng).snapshots.back().sorted;
    };
    const auto first = run();
    const auto second = run();
    const bool same = first.size() == second.size() &&
                      std::equal(first.begin(), first.end(), second.begin(),
                                 [](double u, double v) { return std::bit_cast<std::uint64_t>(u) ==
                                                                 std::bit_cast<std::uint64_t>(v); });
    verdict_report("bit-identical rerun from (seed, config)", same ? 0 : 1, 2);
  }
  return out;
}

// ---------------------------------------------------------------- suites

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"sampler", "stationarity", "pal-pitman",
                                              "tail",    "girsanov",     "all"};
  return names;
}

/// Runs a named suite. "all" also adds the property checks and defaults the
/// level to the batched alpha.
inline std::vector<StatReport> run_suite(const std::string& name, SuiteOptions o) {
  auto append = [](std::vector<StatReport>& dst, std::vector<StatReport> src) {
    dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
  };
  std::vector<StatReport> out;
  if (name == "sampler") {
    append(out, normalization_identity(o));
    append(out, qa_marginals(o));
    append(out, renyi_equivalence(o));
  } else if (name == "stationarity") {
    append(out, stationarity(o));
  } else if (name == "pal-pitman") {
    append(out, pal_pitman(o));
  } else if (name == "tail") {
    append(out, tail(o));
  } else if (name == "girsanov") {
    append(out, girsanov_equivalence(o));
    append(out, mollified_convergence(o));
  } else if (name == "all") {
    if (!o.alpha) o.alpha = stats::batched_alpha;
    for (const char* s : {"sampler", "stationarity", "pal-pitman", "tail", "girsanov"}) {
      append(out, run_suite(s, o));
    }
    append(out, properties(o));
  } else {
    throw InvalidInput("unknown suite '" + name + "'");
  }
  return out;
}

}  // namespace atlas::suites

#pragma once

// Change of measure between the drifted Atlas system and driftless
// (optionally a/2-shifted) Brownian particles H. For a drift integrand b,
//
//   M(t) = sum_steps sum_i b_i(H) dW_i,   <M>(t) = sum_steps sum_i b_i(H)^2 dt,
//   F(t) = exp(M(t) - <M>(t)/2),
//
// with b evaluated at the left end of each step. On the Euler grid this is
// the exact likelihood ratio of the drifted chain to the driftless one, so
// E[phi(H(t)) F(t)] equals the drifted-chain expectation of phi.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "atlas/core.hpp"
#include "atlas/dynamics.hpp"
#include "atlas/rng.hpp"
#include "atlas/stats/report.hpp"

namespace atlas {

struct WeightedPath {
  LabeledConfiguration terminal;
  double log_weight = 0.0;
  double martingale_part = 0.0;
  double quadratic_variation = 0.0;

  double weight() const { return std::exp(log_weight); }
};

namespace detail {

/// Accumulates M and <M> for one driftless path under several integrands
/// sharing the same Brownian increments.
struct MartingaleAccumulator {
  double m = 0.0;
  double qv = 0.0;
};

inline void add_integrand(MartingaleAccumulator& acc, std::span<const double> b,
                          std::span<const double> dw, double dt) {
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i] == 0.0) continue;
    acc.m += b[i] * dw[i];
    acc.qv += b[i] * b[i] * dt;
  }
}

}  // namespace detail

/// Driftless path H_i(t) = x_i + [shift] (a/2) t + W_i(t) with its weight for
/// the drift selected by cfg.scheme (hard: F, mollified: F^beta).
template <NoiseSource Noise>
WeightedPath weighted_driftless_path(const LabeledConfiguration& initial,
                                     const SimulationConfig& cfg,
                                     const ModelParams& params, Noise& noise) {
  validate(cfg);
  detail::require_dynamics_params(params, cfg.shift);
  if (initial.size() != cfg.n) {
    throw InvalidInput("weighted_driftless_path: initial size does not match n");
  }
  const double shift_dt = cfg.shift ? 0.5 * params.a * cfg.dt : 0.0;
  const double sdt = std::sqrt(cfg.dt);
  LabeledConfiguration h = initial;
  std::vector<double> dw(h.size());
  detail::MartingaleAccumulator acc;
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    const bool atlas_hard =
        std::holds_alternative<HardDrift>(cfg.scheme) && !params.ranked_drifts;
    std::size_t lowest = 0;
    std::vector<double> b;
    if (atlas_hard) {
      lowest = detail::argmin_label(h.positions);
    } else {
      b = drift(h, params, cfg.scheme);
    }
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double z = cfg.noise == NoiseMode::zero ? 0.0 : static_cast<double>(noise.normal());
      dw[i] = sdt * z;
    }
    if (atlas_hard) {
      if (params.gamma != 0.0) {
        acc.m += params.gamma * dw[lowest];
        acc.qv += params.gamma * params.gamma * cfg.dt;
      }
    } else {
      detail::add_integrand(acc, b, dw, cfg.dt);
    }
    for (std::size_t i = 0; i < h.size(); ++i) h.positions[i] += shift_dt + dw[i];
  }
  WeightedPath out;
  out.terminal = std::move(h);
  out.martingale_part = acc.m;
  out.quadratic_variation = acc.qv;
  out.log_weight = acc.m - 0.5 * acc.qv;
  return out;
}

/// Test function of the m lowest ranked positions (ascending).
using RankedTestFunction = std::function<double(std::span<const double>)>;

/// Mean of f(lowest m of H(t)) * F(t)^weight_power over the paths, its
/// standard error, and the effective sample size (sum w)^2 / sum w^2 of the
/// plain weights. All sums are shifted by the largest log-weight.
inline StatReport importance_estimate(const RankedTestFunction& test_fn, std::size_t m,
                                      std::span<const WeightedPath> paths,
                                      double weight_power = 1.0,
                                      std::string name = "importance_estimate") {
  if (paths.empty()) throw InvalidInput("importance_estimate: empty path collection");
  const std::size_t n = paths.size();
  double shift = -std::numeric_limits<double>::infinity();
  double lw_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : paths) {
    shift = std::max(shift, weight_power * p.log_weight);
    lw_max = std::max(lw_max, p.log_weight);
  }
  std::vector<double> lowest;
  double sum = 0.0;
  double sum_sq = 0.0;
  double w_sum = 0.0;
  double w_sq = 0.0;
  for (const auto& p : paths) {
    const RankedConfiguration r = rank(p.terminal);
    if (m > r.size()) throw InvalidInput("importance_estimate: m exceeds particle count");
    lowest.assign(r.sorted.begin(), r.sorted.begin() + static_cast<std::ptrdiff_t>(m));
    const double v = test_fn(lowest) * std::exp(weight_power * p.log_weight - shift);
    sum += v;
    sum_sq += v * v;
    const double w = std::exp(p.log_weight - lw_max);
    w_sum += w;
    w_sq += w * w;
  }
  const double nd = static_cast<double>(n);
  const double mean_scaled = sum / nd;
  const double var_scaled =
      n > 1 ? std::max(0.0, (sum_sq - nd * mean_scaled * mean_scaled) / (nd - 1.0)) : 0.0;
  const double scale = std::exp(shift);
  StatReport rep;
  rep.name = std::move(name);
  rep.estimate = mean_scaled * scale;
  rep.std_error = std::sqrt(var_scaled / nd) * scale;
  rep.n_samples = n;
  rep.rule = "estimate only";
  rep.verdict = Verdict::not_applicable;
  rep.extras.emplace_back("ess", w_sum * w_sum / w_sq);
  return rep;
}

struct WeightRatioReport {
  std::vector<double> betas;
  std::vector<double> mean_square;  ///< mean of (1 - F^beta/F)^2 per beta
  std::vector<double> std_error;
  std::size_t n_paths = 0;

  bool non_increasing() const {
    for (std::size_t k = 1; k < mean_square.size(); ++k) {
      if (mean_square[k] > mean_square[k - 1]) return false;
    }
    return true;
  }
};

/// Mean-square distance between the mollified weights F^beta and the hard
/// weight F along common noise paths. H does not depend on the integrand, so
/// every beta shares one driftless path.
inline WeightRatioReport weight_ratio_diagnostic(const LabeledConfiguration& initial,
                                                 const SimulationConfig& cfg,
                                                 const ModelParams& params,
                                                 std::span<const double> betas,
                                                 std::size_t n_paths,
                                                 const RngStream& rng) {
  validate(cfg);
  detail::require_dynamics_params(params, cfg.shift);
  if (params.ranked_drifts) {
    throw InvalidInput("weight_ratio_diagnostic: single Atlas drift only");
  }
  if (initial.size() != cfg.n) throw InvalidInput("weight_ratio_diagnostic: size mismatch");
  if (n_paths == 0) throw InvalidInput("weight_ratio_diagnostic: n_paths must be >= 1");
  for (std::size_t k = 0; k < betas.size(); ++k) {
    if (!(betas[k] > 0.0)) throw InvalidInput("weight_ratio_diagnostic: beta must be positive");
    if (k > 0 && !(betas[k] > betas[k - 1])) {
      throw InvalidInput("weight_ratio_diagnostic: beta schedule must be ascending");
    }
  }
  const std::size_t nb = betas.size();
  const double shift_dt = cfg.shift ? 0.5 * params.a * cfg.dt : 0.0;
  const double sdt = std::sqrt(cfg.dt);
  std::vector<double> sum(nb, 0.0);
  std::vector<double> sum_sq(nb, 0.0);
  std::vector<double> dw(initial.size());
  std::vector<detail::MartingaleAccumulator> soft(nb);
  for (std::size_t p = 0; p < n_paths; ++p) {
    RngStream noise = rng.split(p);
    LabeledConfiguration h = initial;
    detail::MartingaleAccumulator hard;
    std::fill(soft.begin(), soft.end(), detail::MartingaleAccumulator{});
    for (std::size_t k = 0; k < cfg.steps; ++k) {
      for (std::size_t i = 0; i < h.size(); ++i) {
        const double z = cfg.noise == NoiseMode::zero ? 0.0 : noise.normal();
        dw[i] = sdt * z;
      }
      detail::add_integrand(hard, atlas_drift(h, params), dw, cfg.dt);
      for (std::size_t j = 0; j < nb; ++j) {
        detail::add_integrand(soft[j], mollified_drift(h, params, betas[j]), dw, cfg.dt);
      }
      for (std::size_t i = 0; i < h.size(); ++i) h.positions[i] += shift_dt + dw[i];
    }
    const double log_f = hard.m - 0.5 * hard.qv;
    for (std::size_t j = 0; j < nb; ++j) {
      const double d = 1.0 - std::exp((soft[j].m - 0.5 * soft[j].qv) - log_f);
      sum[j] += d * d;
      sum_sq[j] += d * d * d * d;
    }
  }
  WeightRatioReport rep;
  rep.betas.assign(betas.begin(), betas.end());
  rep.n_paths = n_paths;
  const double nd = static_cast<double>(n_paths);
  for (std::size_t j = 0; j < nb; ++j) {
    const double mean = sum[j] / nd;
    const double var = n_paths > 1 ? std::max(0.0, (sum_sq[j] - nd * mean * mean) / (nd - 1.0)) : 0.0;
    rep.mean_square.push_back(mean);
    rep.std_error.push_back(std::sqrt(var / nd));
  }
  return rep;
}

}  // namespace atlas

#pragma once

// Euler-Maruyama integration of the finite-n Atlas system
//
//   x_i <- x_i + (b_i(x) dt + [shift] (a/2) dt) + sqrt(dt) xi_i
//
// with b the hard Atlas drift (gamma on the lowest-ranked particle), the
// ranked multi-drift, or a softmax-mollified Atlas drift. The drift is
// evaluated at the start of each step. Normals are drawn in label order,
// exactly n per step, so any NoiseSource yielding the same sequence
// reproduces a trajectory bit-for-bit regardless of the ranking kernel.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "atlas/core.hpp"
#include "atlas/rng.hpp"

namespace atlas {

struct HardDrift {
  bool operator==(const HardDrift&) const = default;
};

/// Softmax weights exp(-beta*x_i)/sum_j exp(-beta*x_j); beta plays the role
/// of an inverse mollification width.
struct MollifiedDrift {
  double beta = 1.0;
  bool operator==(const MollifiedDrift&) const = default;
};

using DriftScheme = std::variant<HardDrift, MollifiedDrift>;

enum class RankingKernel { argmin_scan, incremental };

/// `zero` replaces every Gaussian increment by 0 (deterministic test hook).
enum class NoiseMode { gaussian, zero };

struct SimulationConfig {
  double dt = 1e-3;
  std::size_t steps = 0;
  std::size_t n = 1;
  DriftScheme scheme = HardDrift{};
  bool shift = false;
  std::size_t record_every = 1;
  std::uint64_t seed = 0;
  RankingKernel kernel = RankingKernel::argmin_scan;
  NoiseMode noise = NoiseMode::gaussian;

  double horizon() const { return dt * static_cast<double>(steps); }
};

inline void validate(const SimulationConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) {
    throw InvalidInput("dt must be positive");
  }
  if (cfg.n < 1) throw InvalidInput("n must be >= 1");
  if (cfg.record_every < 1) throw InvalidInput("record_every must be >= 1");
  if (const auto* m = std::get_if<MollifiedDrift>(&cfg.scheme)) {
    if (!(m->beta > 0.0) || !std::isfinite(m->beta)) {
      throw InvalidInput("beta must be positive");
    }
  }
}

template <class N>
concept NoiseSource = requires(N& source) {
  { source.normal() } -> std::convertible_to<double>;
};

namespace detail {

inline bool rank_less(std::span<const double> x, std::size_t i, std::size_t j) {
  return x[i] < x[j] || (x[i] == x[j] && i < j);
}

inline std::size_t argmin_label(std::span<const double> x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] < x[best]) best = i;
  }
  return best;
}

/// Labels of the m lowest ranks, in rank order.
inline void lowest_labels(std::span<const double> x, std::size_t m,
                          std::vector<std::size_t>& idx) {
  idx.resize(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m),
                    idx.end(),
                    [&](std::size_t i, std::size_t j) { return rank_less(x, i, j); });
}

inline void require_dynamics_params(const ModelParams& p, bool shift) {
  if (!std::isfinite(p.gamma)) throw InvalidInput("gamma must be finite");
  if (shift && !(p.a > 0.0 && std::isfinite(p.a))) {
    throw InvalidInput("a must be positive when the a/2 shift is on");
  }
  if (p.ranked_drifts) {
    if (p.ranked_drifts->empty()) {
      throw InvalidInput("ranked_drifts must be nonempty when present");
    }
    for (double g : *p.ranked_drifts) {
      if (!std::isfinite(g)) throw InvalidInput("ranked_drifts must be finite");
    }
  }
}

}  // namespace detail

/// gamma on the lowest-ranked label (ties: smallest label), 0 elsewhere.
inline std::vector<double> atlas_drift(const LabeledConfiguration& x,
                                       const ModelParams& params) {
  std::vector<double> b(x.size(), 0.0);
  if (!b.empty()) b[detail::argmin_label(x.positions)] = params.gamma;
  return b;
}

/// gamma_j on the label holding rank j (j < m), 0 elsewhere.
inline std::vector<double> multi_drift(const LabeledConfiguration& x,
                                       std::span<const double> ranked_drifts) {
  const std::size_t m = ranked_drifts.size();
  if (m > x.size()) {
    throw InvalidInput("multi_drift: more ranked drifts (" + std::to_string(m) +
                       ") than particles (" + std::to_string(x.size()) + ")");
  }
  std::vector<double> b(x.size(), 0.0);
  std::vector<std::size_t> idx;
  detail::lowest_labels(x.positions, m, idx);
  for (std::size_t j = 0; j < m; ++j) b[idx[j]] = ranked_drifts[j];
  return b;
}

/// gamma * softmax(-beta * x). Gradient of the softened minimum potential
/// -(2 gamma / beta) log sum_j exp(-beta x_j), halved. Sums to gamma and
/// each entry is bounded by |gamma|.
inline std::vector<double> mollified_drift(const LabeledConfiguration& x,
                                           const ModelParams& params, double beta) {
  if (!(beta > 0.0)) throw InvalidInput("mollified_drift: beta must be positive");
  std::vector<double> b(x.size(), 0.0);
  if (b.empty()) return b;
  const double lo = *std::min_element(x.positions.begin(), x.positions.end());
  double total = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    b[i] = std::exp(-beta * (x.positions[i] - lo));
    total += b[i];
  }
  for (auto& v : b) v = params.gamma * (v / total);
  return b;
}

/// Drift vector selected by the scheme: hard uses the ranked drifts when
/// present, the Atlas drift otherwise.
inline std::vector<double> drift(const LabeledConfiguration& x,
                                 const ModelParams& params,
                                 const DriftScheme& scheme) {
  if (const auto* m = std::get_if<MollifiedDrift>(&scheme)) {
    if (params.ranked_drifts) {
      throw InvalidInput("mollified scheme supports only the single Atlas drift");
    }
    return mollified_drift(x, params, m->beta);
  }
  if (params.ranked_drifts) return multi_drift(x, *params.ranked_drifts);
  return atlas_drift(x, params);
}

/// One Euler-Maruyama step.
template <NoiseSource Noise>
LabeledConfiguration step(const LabeledConfiguration& state,
                          const SimulationConfig& cfg, const ModelParams& params,
                          Noise& noise) {
  if (state.size() != cfg.n) {
    throw InvalidInput("step: state has " + std::to_string(state.size()) +
                       " particles, config expects " + std::to_string(cfg.n));
  }
  validate(cfg);
  detail::require_dynamics_params(params, cfg.shift);
  const std::vector<double> b = drift(state, params, cfg.scheme);
  const double shift_dt = cfg.shift ? 0.5 * params.a * cfg.dt : 0.0;
  const double sdt = std::sqrt(cfg.dt);
  LabeledConfiguration next = state;
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double z = cfg.noise == NoiseMode::zero ? 0.0 : static_cast<double>(noise.normal());
    next.positions[i] += (b[i] * cfg.dt + shift_dt) + sdt * z;
  }
  return next;
}

/// Stateful integrator used by simulate() and the verification checks.
/// The hard Atlas drift runs a fused update+argmin pass; the incremental
/// kernel keeps a rank order repaired by insertion sort.
class Integrator {
 public:
  Integrator(LabeledConfiguration initial, const SimulationConfig& cfg,
             const ModelParams& params)
      : cfg_(cfg), params_(params), x_(std::move(initial.positions)) {
    validate(cfg_);
    detail::require_dynamics_params(params_, cfg_.shift);
    if (x_.size() != cfg_.n) {
      throw InvalidInput("initial configuration has " + std::to_string(x_.size()) +
                         " particles, config expects " + std::to_string(cfg_.n));
    }
    for (double v : x_) {
      if (!std::isfinite(v)) throw InvalidInput("initial position is not finite");
    }
    hard_ = std::holds_alternative<HardDrift>(cfg_.scheme);
    if (!hard_ && params_.ranked_drifts) {
      throw InvalidInput("mollified scheme supports only the single Atlas drift");
    }
    if (params_.ranked_drifts && params_.ranked_drifts->size() > x_.size()) {
      throw InvalidInput("more ranked drifts than particles");
    }
    shift_dt_ = cfg_.shift ? 0.5 * params_.a * cfg_.dt : 0.0;
    sdt_ = std::sqrt(cfg_.dt);
    if (cfg_.kernel == RankingKernel::incremental) {
      order_.resize(x_.size());
      std::iota(order_.begin(), order_.end(), std::size_t{0});
      std::sort(order_.begin(), order_.end(), [&](std::size_t i, std::size_t j) {
        return detail::rank_less(x_, i, j);
      });
    }
    lowest_ = detail::argmin_label(x_);
  }

  std::span<const double> positions() const { return x_; }
  LabeledConfiguration state() const { return LabeledConfiguration{x_}; }
  const SimulationConfig& config() const { return cfg_; }

  template <NoiseSource Noise>
  void advance(Noise& noise) {
    if (!hard_) {
      advance_mollified(noise);
    } else if (params_.ranked_drifts) {
      advance_multi(noise);
    } else {
      advance_atlas(noise);
    }
  }

 private:
  template <NoiseSource Noise>
  double draw(Noise& noise) const {
    return cfg_.noise == NoiseMode::zero ? 0.0 : static_cast<double>(noise.normal());
  }

  template <NoiseSource Noise>
  void advance_atlas(Noise& noise) {
    const double gdt = params_.gamma * cfg_.dt;
    const std::size_t n = x_.size();
    if (cfg_.kernel == RankingKernel::argmin_scan) {
      std::size_t best = 0;
      double best_v = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        const double bdt = i == lowest_ ? gdt : 0.0;
        const double v = x_[i] + ((bdt + shift_dt_) + sdt_ * draw(noise));
        x_[i] = v;
        if (v < best_v) {
          best_v = v;
          best = i;
        }
      }
      lowest_ = best;
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const double bdt = i == lowest_ ? gdt : 0.0;
        x_[i] += (bdt + shift_dt_) + sdt_ * draw(noise);
      }
      repair_order();
      lowest_ = order_.front();
    }
  }

  template <NoiseSource Noise>
  void advance_multi(Noise& noise) {
    const auto& drifts = *params_.ranked_drifts;
    const std::size_t m = drifts.size();
    if (cfg_.kernel == RankingKernel::argmin_scan) {
      detail::lowest_labels(x_, m, scratch_idx_);
    } else {
      scratch_idx_.assign(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(m));
    }
    bdt_.assign(x_.size(), 0.0);
    for (std::size_t j = 0; j < m; ++j) bdt_[scratch_idx_[j]] = drifts[j] * cfg_.dt;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      x_[i] += (bdt_[i] + shift_dt_) + sdt_ * draw(noise);
    }
    if (cfg_.kernel == RankingKernel::incremental) repair_order();
    lowest_ = cfg_.kernel == RankingKernel::incremental ? order_.front()
                                                        : detail::argmin_label(x_);
  }

  template <NoiseSource Noise>
  void advance_mollified(Noise& noise) {
    const double beta = std::get<MollifiedDrift>(cfg_.scheme).beta;
    const std::vector<double> b = mollified_drift(LabeledConfiguration{x_}, params_, beta);
    for (std::size_t i = 0; i < x_.size(); ++i) {
      x_[i] += (b[i] * cfg_.dt + shift_dt_) + sdt_ * draw(noise);
    }
    if (cfg_.kernel == RankingKernel::incremental) repair_order();
    lowest_ = detail::argmin_label(x_);
  }

  // Insertion sort; O(n + inversions) on a near-sorted order.
  void repair_order() {
    for (std::size_t k = 1; k < order_.size(); ++k) {
      const std::size_t label = order_[k];
      std::size_t j = k;
      while (j > 0 && detail::rank_less(x_, label, order_[j - 1])) {
        order_[j] = order_[j - 1];
        --j;
      }
      order_[j] = label;
    }
  }

  SimulationConfig cfg_;
  ModelParams params_;
  std::vector<double> x_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> scratch_idx_;
  std::vector<double> bdt_;
  std::size_t lowest_ = 0;
  bool hard_ = true;
  double shift_dt_ = 0.0;
  double sdt_ = 0.0;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<RankedConfiguration> snapshots;
  ModelParams params;
  SimulationConfig config;
};

/// Runs cfg.steps steps, snapshotting the ranked state at t = 0 and after
/// every record_every steps.
template <NoiseSource Noise>
TrajectoryRecord simulate(const LabeledConfiguration& initial,
                          const SimulationConfig& cfg, const ModelParams& params,
                          Noise& noise) {
  Integrator integ(initial, cfg, params);
  TrajectoryRecord rec;
  rec.params = params;
  rec.config = cfg;
  rec.times.reserve(1 + cfg.steps / cfg.record_every);
  rec.snapshots.reserve(1 + cfg.steps / cfg.record_every);
  rec.times.push_back(0.0);
  rec.snapshots.push_back(rank(integ.state()));
  for (std::size_t k = 1; k <= cfg.steps; ++k) {
    integ.advance(noise);
    if (k % cfg.record_every == 0) {
      rec.times.push_back(static_cast<double>(k) * cfg.dt);
      rec.snapshots.push_back(rank(integ.state()));
    }
  }
  return rec;
}

struct TruncationReport {
  double min_separation = 0.0;  ///< min over records of X_(n) - X_(m)
  double threshold = 0.0;       ///< safety * sqrt(horizon)
  bool top_entered_low_ranks = false;
  bool clean = false;
};

/// Evidence that the top boundary of a truncated system stayed away from the
/// lowest m ranks (m is 1-based: ranks 1..m). Clean iff the initially
/// top-ranked label never entered ranks 1..m and the separation
/// X_(n) - X_(m) stayed above safety * sqrt(T) at every record.
inline TruncationReport truncation_diagnostic(const TrajectoryRecord& record,
                                              std::size_t m, double safety = 3.0) {
  if (record.snapshots.empty()) throw InvalidInput("truncation_diagnostic: empty record");
  const std::size_t n = record.snapshots.front().size();
  if (m < 1 || m >= n) {
    throw InvalidInput("truncation_diagnostic: need 1 <= m < n");
  }
  const std::size_t top_label = record.snapshots.front().label_at[n - 1];
  TruncationReport rep;
  rep.min_separation = std::numeric_limits<double>::infinity();
  for (const auto& snap : record.snapshots) {
    rep.min_separation = std::min(rep.min_separation, snap.sorted[n - 1] - snap.sorted[m - 1]);
    if (snap.rank_of[top_label] < m) rep.top_entered_low_ranks = true;
  }
  rep.threshold = safety * std::sqrt(record.times.back());
  rep.clean = !rep.top_entered_low_ranks && rep.min_separation > rep.threshold;
  return rep;
}

}  // namespace atlas

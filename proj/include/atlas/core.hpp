#pragma once

// Domain types for finite Atlas configurations: model parameters, labeled and
// ranked particle positions, gap vectors.
//
// Indices are 0-based throughout. Label i is the i-th entry of a
// LabeledConfiguration; rank 0 is the lowest (Atlas) particle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace atlas {

/// Thrown when an operation's precondition on its inputs is violated.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Drift strength gamma, stationary shape a, and optional ranked drifts
/// (gamma_1..gamma_m) for the multi-drift generalization.
struct ModelParams {
  double gamma = 0.0;
  double a = 1.0;
  std::optional<std::vector<double>> ranked_drifts;

  /// Shape of the Gamma law of exp(a * X_(1)) under the tilted measure.
  double alpha() const { return 2.0 * gamma / a + 1.0; }

  /// Rate of the i-th gap (1-based) under the product gap law: 2*gamma + i*a.
  double gap_rate(std::size_t i) const {
    return 2.0 * gamma + static_cast<double>(i) * a;
  }
};

/// Every violated constraint, one message per entry. Empty means valid.
inline std::vector<std::string> validate_params(const ModelParams& p) {
  std::vector<std::string> out;
  if (!std::isfinite(p.gamma)) out.emplace_back("gamma must be finite");
  if (!std::isfinite(p.a)) {
    out.emplace_back("a must be finite");
  } else if (!(p.a > 0.0)) {
    out.emplace_back("a must be positive");
  }
  if (std::isfinite(p.gamma) && std::isfinite(p.a)) {
    const double gamma_minus = std::max(-p.gamma, 0.0);
    if (!(p.a > 2.0 * gamma_minus)) {
      std::ostringstream os;
      os << "a must exceed 2*gamma_- (a=" << p.a << ", 2*gamma_-="
         << 2.0 * gamma_minus << ")";
      out.push_back(os.str());
    }
  }
  if (p.ranked_drifts) {
    if (p.ranked_drifts->empty()) {
      out.emplace_back("ranked_drifts must be nonempty when present");
    }
    for (double g : *p.ranked_drifts) {
      if (!std::isfinite(g)) {
        out.emplace_back("ranked_drifts entries must be finite");
        break;
      }
    }
  }
  return out;
}

/// Throws InvalidInput naming every violation.
inline void require_valid(const ModelParams& p) {
  const auto v = validate_params(p);
  if (v.empty()) return;
  std::string msg = "invalid model parameters: ";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) msg += "; ";
    msg += v[i];
  }
  throw InvalidInput(msg);
}

/// Particle positions indexed by label.
struct LabeledConfiguration {
  std::vector<double> positions;

  std::size_t size() const { return positions.size(); }
  bool operator==(const LabeledConfiguration&) const = default;
};

/// Ascending positions together with the ranking permutation.
/// rank_of[label] is the rank of that label, label_at[rank] its inverse.
struct RankedConfiguration {
  std::vector<double> sorted;
  std::vector<std::size_t> rank_of;
  std::vector<std::size_t> label_at;

  std::size_t size() const { return sorted.size(); }
  bool empty() const { return sorted.empty(); }
  bool operator==(const RankedConfiguration&) const = default;

  /// Already-ascending positions with labels equal to ranks.
  static RankedConfiguration from_sorted(std::vector<double> ascending) {
    RankedConfiguration r;
    r.rank_of.resize(ascending.size());
    std::iota(r.rank_of.begin(), r.rank_of.end(), std::size_t{0});
    r.label_at = r.rank_of;
    r.sorted = std::move(ascending);
    return r;
  }

  LabeledConfiguration labeled() const {
    LabeledConfiguration x;
    x.positions.resize(sorted.size());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      x.positions[label_at[k]] = sorted[k];
    }
    return x;
  }
};

/// Consecutive differences of ranked positions; all entries >= 0.
struct GapVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// Sorts positions, breaking exact ties by smaller label first.
inline RankedConfiguration rank(const LabeledConfiguration& x) {
  const auto& pos = x.positions;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (!std::isfinite(pos[i])) {
      throw InvalidInput("rank: non-finite position at label " +
                         std::to_string(i));
    }
  }
  RankedConfiguration r;
  r.label_at.resize(pos.size());
  std::iota(r.label_at.begin(), r.label_at.end(), std::size_t{0});
  std::stable_sort(r.label_at.begin(), r.label_at.end(),
                   [&](std::size_t i, std::size_t j) { return pos[i] < pos[j]; });
  r.rank_of.resize(pos.size());
  r.sorted.resize(pos.size());
  for (std::size_t k = 0; k < pos.size(); ++k) {
    r.rank_of[r.label_at[k]] = k;
    r.sorted[k] = pos[r.label_at[k]];
  }
  return r;
}

inline GapVector gaps(const RankedConfiguration& r) {
  if (r.size() < 2) {
    throw InvalidInput("gaps: need at least two particles (empty gap vector)");
  }
  GapVector z;
  z.values.resize(r.size() - 1);
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    z.values[i] = r.sorted[i + 1] - r.sorted[i];
  }
  return z;
}

}  // namespace atlas

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace atlas {

/// not_applicable marks pure estimates that carry no acceptance rule.
enum class Verdict { pass, fail, inconclusive, not_applicable };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::not_applicable: return "n/a";
  }
  return "?";
}

/// Outcome of one statistical check. Fields without a meaning for a given
/// check hold NaN, never a made-up value.
struct StatReport {
  static constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  std::string name;
  double estimate = nan;
  double std_error = nan;
  double statistic = nan;
  double p_value = nan;
  double target = nan;
  Verdict verdict = Verdict::not_applicable;
  std::size_t n_samples = 0;
  std::string rule;
  /// Non-gating reports (e.g. the coarse-dt run of a refinement pair) are
  /// shown but do not enter the overall verdict.
  bool gating = true;
  std::vector<std::pair<std::string, double>> extras;

  bool passed() const { return verdict == Verdict::pass; }
};

/// fail beats inconclusive beats pass; non-gating and n/a reports are ignored.
inline Verdict overall_verdict(const std::vector<StatReport>& reports) {
  bool inconclusive = false;
  for (const auto& r : reports) {
    if (!r.gating) continue;
    if (r.verdict == Verdict::fail) return Verdict::fail;
    if (r.verdict == Verdict::inconclusive) inconclusive = true;
  }
  return inconclusive ? Verdict::inconclusive : Verdict::pass;
}

}  // namespace atlas

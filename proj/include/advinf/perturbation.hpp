#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "advinf/error.hpp"
#include "advinf/graph.hpp"
#include "advinf/types.hpp"

namespace advinf {

/// Which end of a feature's box a perturbed value is moved to.
enum class Snap : std::uint8_t { kLower, kUpper };

struct PerturbationEntry {
  Index feature = 0;
  double delta = 0.0;
  Snap snap = Snap::kLower;
  /// Contribution to the margin objective that selected this entry (0 when unknown).
  double gain = 0.0;
};

/// Sparse per-feature deltas on one node. Entries are sorted by feature index.
struct FeaturePerturbation {
  std::vector<PerturbationEntry> entries;

  bool empty() const noexcept { return entries.empty(); }
  std::size_t size() const noexcept { return entries.size(); }

  Vector dense(Index dim) const {
    Vector out = Vector::Zero(dim);
    for (const auto& e : entries) out(e.feature) = e.delta;
    return out;
  }
};

enum class BoundsPolicy { kBinary, kGlobalMinMax, kPerFeature };

inline std::string_view to_string(BoundsPolicy p) {
  switch (p) {
    case BoundsPolicy::kBinary: return "binary";
    case BoundsPolicy::kGlobalMinMax: return "global-minmax";
    case BoundsPolicy::kPerFeature: return "per-feature";
  }
  return "?";
}

inline BoundsPolicy parse_bounds_policy(std::string_view s) {
  if (s == "binary") return BoundsPolicy::kBinary;
  if (s == "global-minmax" || s == "global") return BoundsPolicy::kGlobalMinMax;
  if (s == "per-feature") return BoundsPolicy::kPerFeature;
  throw ConfigError("unknown bounds policy '" + std::string(s) + "'");
}

/// floor(fraction * dim), at least 1.
inline Index feature_budget_from_fraction(double fraction, Index dim) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("feature budget fraction must lie in (0, 1]");
  const auto b = static_cast<Index>(std::floor(fraction * dim + 1e-9));
  return std::max<Index>(1, b);
}

/// Box [lb, ub] per feature plus the per-node cardinality budget.
struct PerturbationDomain {
  Vector lb;
  Vector ub;
  Index feature_budget = 1;

  Index dim() const noexcept { return static_cast<Index>(lb.size()); }

  static PerturbationDomain uniform(Index dim, double lo, double hi, Index budget) {
    if (lo > hi) throw ConfigError("lower bound exceeds upper bound");
    if (budget < 1) throw ConfigError("feature budget must be >= 1");
    return {Vector::Constant(dim, lo), Vector::Constant(dim, hi), budget};
  }

  static PerturbationDomain from_policy(BoundsPolicy policy, const Matrix& x, Index budget) {
    const auto dim = static_cast<Index>(x.cols());
    switch (policy) {
      case BoundsPolicy::kBinary:
        return uniform(dim, 0.0, 1.0, budget);
      case BoundsPolicy::kGlobalMinMax:
        if (x.size() == 0) return uniform(dim, 0.0, 0.0, budget);
        return uniform(dim, x.minCoeff(), x.maxCoeff(), budget);
      case BoundsPolicy::kPerFeature: {
        if (budget < 1) throw ConfigError("feature budget must be >= 1");
        if (x.rows() == 0) return uniform(dim, 0.0, 0.0, budget);
        return {x.colwise().minCoeff().transpose(), x.colwise().maxCoeff().transpose(), budget};
      }
    }
    throw ConfigError("unhandled bounds policy");
  }
};

/// Throws InvariantViolation unless `eps` is within budget and box, sorted, and (for
/// binary data) lands exactly on {0, 1}.
inline void validate_perturbation(const Eigen::Ref<const Eigen::RowVectorXd>& x_i,
                                  const FeaturePerturbation& eps, const PerturbationDomain& dom,
                                  FeatureKind kind) {
  if (eps.size() > dom.feature_budget)
    throw InvariantViolation("perturbation touches " + std::to_string(eps.size()) +
                             " features, budget is " + std::to_string(dom.feature_budget));
  for (std::size_t k = 0; k < eps.entries.size(); ++k) {
    const auto& e = eps.entries[k];
    if (k > 0 && eps.entries[k - 1].feature >= e.feature)
      throw InvariantViolation("perturbation entries are not strictly increasing by feature");
    if (e.feature >= dom.dim()) throw InvariantViolation("perturbation feature out of range");
    const double v = x_i(e.feature) + e.delta;
    // x + (bound - x) may round one ulp past the bound.
    const double lo = dom.lb(e.feature), hi = dom.ub(e.feature);
    const double slack = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
    if (!std::isfinite(v) || v < lo - slack || v > hi + slack)
      throw InvariantViolation("feature " + std::to_string(e.feature) + " leaves its box");
    if (kind == FeatureKind::kBinary && v != 0.0 && v != 1.0)
      throw InvariantViolation("binary feature " + std::to_string(e.feature) + " would become " +
                               std::to_string(v));
  }
}

/// A (feature, direction) list without magnitudes. Instantiated per node by snapping
/// to that node's bound in the stored direction; entries with zero headroom are dropped.
struct PerturbationTemplate {
  std::vector<std::pair<Index, Snap>> features;  // sorted by feature

  FeaturePerturbation instantiate(const Eigen::Ref<const Eigen::RowVectorXd>& x_i,
                                  const PerturbationDomain& dom) const {
    FeaturePerturbation out;
    for (const auto& [d, snap] : features) {
      const double target = snap == Snap::kUpper ? dom.ub(d) : dom.lb(d);
      const double delta = target - x_i(d);
      if (delta != 0.0) out.entries.push_back({d, delta, snap, 0.0});
    }
    return out;
  }
};

}  // namespace advinf

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "advinf/error.hpp"
#include "advinf/graph.hpp"
#include "advinf/perturbation.hpp"
#include "advinf/surrogate.hpp"
#include "advinf/types.hpp"

namespace advinf {

/// Optimum of the margin problem for one (candidate i, neighbor j, target label) triple.
struct PairwiseSolution {
  Index candidate = 0;
  Index neighbor = 0;
  int source_label = 0;  // clean surrogate prediction of the neighbor
  int target_label = 0;
  FeaturePerturbation perturbation;
  double objective = 0.0;  // clean margin plus the selected gains
  bool flips = false;      // argmax of the perturbed logits equals target_label
};

/// omega_d = alpha_ij * (w_dc - w_dc_hat).
inline Vector margin_coefficients(const SurrogateModel& m, double alpha_ij, int c, int c_hat) {
  if (c == c_hat) throw std::invalid_argument("margin coefficients need two distinct labels");
  if (c < 0 || c_hat < 0 || c >= m.num_labels() || c_hat >= m.num_labels())
    throw LabelError("margin label out of range");
  if (alpha_ij == 0.0) return Vector::Zero(m.num_features());
  return alpha_ij * (m.weights.col(c) - m.weights.col(c_hat));
}

inline Vector margin_coefficients(const SurrogateModel& m, const PropagationOperator& op, Index i,
                                  Index j, int c, int c_hat) {
  if (i >= op.num_nodes() || j >= op.num_nodes()) throw IndexError("node out of range");
  return margin_coefficients(m, op.alpha(i, j), c, c_hat);
}

struct BoxLpSolution {
  Vector eps;    // optimal delta per feature without a cardinality limit
  Vector gains;  // omega_d * eps_d
};

/// Each coordinate goes to ub when its coefficient is positive, otherwise to lb.
inline BoxLpSolution solve_box_lp(const Vector& omega, const Eigen::Ref<const Eigen::RowVectorXd>& x_i,
                                  const PerturbationDomain& dom) {
  const auto d = omega.size();
  if (x_i.size() != d || dom.lb.size() != d) throw ContractError("box LP: dimension mismatch");
  BoxLpSolution s{Vector(d), Vector(d)};
  for (Eigen::Index k = 0; k < d; ++k) {
    s.eps(k) = omega(k) > 0.0 ? dom.ub(k) - x_i(k) : dom.lb(k) - x_i(k);
    s.gains(k) = omega(k) * s.eps(k);
  }
  return s;
}

/// Keeps the feature_budget coordinates with the largest strictly positive gain (ties to
/// the lower index). The objective is separable over independent boxes, so this is the
/// exact optimum under the cardinality limit.
inline FeaturePerturbation restrict_topk(const BoxLpSolution& lp, const PerturbationDomain& dom) {
  std::vector<Index> positive;
  for (Eigen::Index k = 0; k < lp.gains.size(); ++k) {
    if (lp.gains(k) > 0.0) positive.push_back(static_cast<Index>(k));
  }
  const std::size_t keep = std::min<std::size_t>(positive.size(), dom.feature_budget);
  auto by_gain = [&](Index a, Index b) {
    if (lp.gains(a) != lp.gains(b)) return lp.gains(a) > lp.gains(b);
    return a < b;
  };
  std::partial_sort(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(keep),
                    positive.end(), by_gain);
  positive.resize(keep);
  std::sort(positive.begin(), positive.end());
  FeaturePerturbation out;
  out.entries.reserve(keep);
  for (Index k : positive) {
    out.entries.push_back({k, lp.eps(k), lp.eps(k) > 0.0 ? Snap::kUpper : Snap::kLower, lp.gains(k)});
  }
  return out;
}

/// Best perturbation of node i that moves neighbor j's surrogate prediction to one of
/// `target_labels`. A solution counts only if the full perturbed argmax equals the
/// target; among those, the largest objective wins (ties to the lower label).
inline std::optional<PairwiseSolution> optimal_pair_perturbation(
    const SurrogateModel& m, double alpha_ij, const Eigen::Ref<const Eigen::RowVectorXd>& x_i,
    const Vector& clean_logits_j, Index i, Index j, std::span<const int> target_labels,
    const PerturbationDomain& dom) {
  if (alpha_ij == 0.0) return std::nullopt;
  const int c_hat = argmax_lowest(clean_logits_j);
  std::optional<PairwiseSolution> best;
  for (int c : target_labels) {
    if (c == c_hat) continue;
    const Vector omega = margin_coefficients(m, alpha_ij, c, c_hat);
    FeaturePerturbation eps = restrict_topk(solve_box_lp(omega, x_i, dom), dom);
    if (eps.empty()) continue;
    double objective = clean_logits_j(c) - clean_logits_j(c_hat);
    for (const auto& e : eps.entries) objective += e.gain;
    const Vector z = perturbed_logits(m, clean_logits_j, alpha_ij, eps);
    if (argmax_lowest(z) != c) continue;
    if (!best || objective > best->objective) {
      best = PairwiseSolution{i, j, c_hat, c, std::move(eps), objective, true};
    }
  }
  return best;
}

inline std::optional<PairwiseSolution> optimal_pair_perturbation(
    const SurrogateModel& m, const PropagationOperator& op, const Matrix& x, Index i, Index j,
    std::span<const int> target_labels, const PerturbationDomain& dom) {
  return optimal_pair_perturbation(m, op.alpha(i, j), x.row(i), clean_logits(m, op, x, j), i, j,
                                   target_labels, dom);
}

/// Merges per-neighbor optima into one perturbation: the feature_budget most frequent
/// features (ties: larger summed |gain|, then lower index), each moved in its most
/// frequent direction (ties: larger summed |gain|, then toward ub).
inline FeaturePerturbation aggregate_final_perturbation(std::span<const PairwiseSolution> solutions,
                                                        const PerturbationDomain& dom,
                                                        const Eigen::Ref<const Eigen::RowVectorXd>& x_i) {
  struct Tally {
    std::size_t count = 0, up = 0, down = 0;
    double gain = 0.0, up_gain = 0.0, down_gain = 0.0;
  };
  std::map<Index, Tally> tally;
  for (const auto& s : solutions) {
    for (const auto& e : s.perturbation.entries) {
      Tally& t = tally[e.feature];
      ++t.count;
      t.gain += std::abs(e.gain);
      if (e.snap == Snap::kUpper) {
        ++t.up;
        t.up_gain += std::abs(e.gain);
      } else {
        ++t.down;
        t.down_gain += std::abs(e.gain);
      }
    }
  }
  std::vector<std::pair<Index, Tally>> ranked(tally.begin(), tally.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    if (a.second.gain != b.second.gain) return a.second.gain > b.second.gain;
    return a.first < b.first;
  });
  if (ranked.size() > dom.feature_budget) ranked.resize(dom.feature_budget);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  FeaturePerturbation out;
  for (const auto& [d, t] : ranked) {
    bool up;
    if (t.up != t.down) up = t.up > t.down;
    else if (t.up_gain != t.down_gain) up = t.up_gain > t.down_gain;
    else up = true;
    const double delta = (up ? dom.ub(d) : dom.lb(d)) - x_i(d);
    if (delta == 0.0) continue;
    out.entries.push_back({d, delta, up ? Snap::kUpper : Snap::kLower, up ? t.up_gain : t.down_gain});
  }
  return out;
}

/// Perturbs row i of `x` in place. The perturbation is validated first; only the last-ulp
/// rounding of x + (bound - x) is trimmed back onto the box.
inline void apply_perturbation_inplace(Matrix& x, Index i, const FeaturePerturbation& eps,
                                       const PerturbationDomain& dom, FeatureKind kind) {
  if (i >= x.rows()) throw IndexError("perturbed node out of range");
  validate_perturbation(x.row(i), eps, dom, kind);
  for (const auto& e : eps.entries) {
    x(i, e.feature) = std::clamp(x(i, e.feature) + e.delta, dom.lb(e.feature), dom.ub(e.feature));
  }
}

inline Matrix apply_perturbation(const Matrix& x, Index i, const FeaturePerturbation& eps,
                                 const PerturbationDomain& dom, FeatureKind kind) {
  Matrix out = x;
  apply_perturbation_inplace(out, i, eps, dom, kind);
  return out;
}

}  // namespace advinf

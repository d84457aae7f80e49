#pragma once

#include <algorithm>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advinf/error.hpp"
#include "advinf/graph.hpp"
#include "advinf/parallel.hpp"
#include "advinf/perturb.hpp"
#include "advinf/perturbation.hpp"
#include "advinf/surrogate.hpp"
#include "advinf/types.hpp"

namespace advinf {

enum class AttackKind {
  kUntargeted,
  kDegradeLabel,  // misclassify neighbors currently predicted as the target label
  kLureLabel,     // push neighbors into the target label
};

inline std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::kUntargeted: return "untargeted";
    case AttackKind::kDegradeLabel: return "degrade";
    case AttackKind::kLureLabel: return "lure";
  }
  return "?";
}

inline AttackKind parse_attack_kind(std::string_view s) {
  if (s == "untargeted") return AttackKind::kUntargeted;
  if (s == "degrade" || s == "type1" || s == "type-i") return AttackKind::kDegradeLabel;
  if (s == "lure" || s == "type2" || s == "type-ii") return AttackKind::kLureLabel;
  throw ConfigError("unknown attack mode '" + std::string(s) + "'");
}

struct AttackMode {
  AttackKind kind = AttackKind::kUntargeted;
  int target_label = -1;
  bool consistency = true;
  bool global_perturbation = false;

  void validate(int num_labels) const {
    if (kind == AttackKind::kUntargeted) return;
    if (target_label < 0 || target_label >= num_labels)
      throw ConfigError("label-oriented attack needs a target label in [0," +
                        std::to_string(num_labels) + ")");
  }
};

/// Read-only state shared by every candidate evaluation.
class AttackContext {
 public:
  AttackContext(const SurrogateModel& model, const PropagationOperator& op, const Matrix& x,
                const PerturbationDomain& dom)
      : model_(model), op_(op), x_(x), dom_(dom) {
    if (x.cols() != static_cast<Eigen::Index>(model.num_features()) || dom.dim() != model.num_features())
      throw ContractError("attack context: feature dimensions disagree");
    clean_logits_ = model.logits(propagate_features(op, x));
    clean_labels_.resize(static_cast<std::size_t>(clean_logits_.rows()));
    for (Eigen::Index r = 0; r < clean_logits_.rows(); ++r) clean_labels_[r] = argmax_lowest(clean_logits_.row(r));
  }

  const SurrogateModel& model() const noexcept { return model_; }
  const PropagationOperator& op() const noexcept { return op_; }
  const Matrix& features() const noexcept { return x_; }
  const PerturbationDomain& domain() const noexcept { return dom_; }
  Vector clean_logits(Index j) const { return clean_logits_.row(j).transpose(); }
  int clean_label(Index j) const { return clean_labels_[j]; }
  const std::vector<int>& clean_labels() const noexcept { return clean_labels_; }
  int num_labels() const noexcept { return model_.num_labels(); }

 private:
  const SurrogateModel& model_;
  const PropagationOperator& op_;
  const Matrix& x_;
  const PerturbationDomain& dom_;
  Matrix clean_logits_;
  std::vector<int> clean_labels_;
};

struct CandidateScore {
  Index candidate = 0;
  std::optional<int> chosen_label;  // unset without consistency or when nothing flips
  FeaturePerturbation final_perturbation;
  NodeSet affected;  // neighbors flipped (per mode) by final_perturbation
  std::size_t score = 0;
  /// Largest per-neighbor-optimum flip count before aggregation; diagnostic only.
  std::size_t pairwise_count = 0;
};

/// Whether neighbor j with clean surrogate label `clean` counts as affected when its
/// perturbed label is `perturbed`.
inline bool qualifies(const AttackMode& mode, std::optional<int> group_label, int clean, int perturbed) {
  if (perturbed == clean) return false;
  switch (mode.kind) {
    case AttackKind::kUntargeted: return !group_label || perturbed == *group_label;
    case AttackKind::kDegradeLabel: return clean == mode.target_label;
    case AttackKind::kLureLabel: return perturbed == mode.target_label;
  }
  return false;
}

/// Scores one candidate. Per-neighbor margin optima are grouped by the label they reach
/// (or pooled when consistency is off); each group is merged into one perturbation and
/// every receptive neighbor is re-predicted under it. The group flipping the most
/// neighbors wins, ties to the lower label. Every flipping pairwise optimum is appended
/// to `audit` when given.
inline CandidateScore score_candidate(Index i, const AttackMode& mode, const AttackContext& ctx,
                                      std::vector<PairwiseSolution>* audit = nullptr) {
  const int k = ctx.num_labels();
  mode.validate(k);
  const auto& m = ctx.model();
  const auto x_i = ctx.features().row(i);
  const NodeSet neighbors = receptive_neighbors(ctx.op(), i);

  std::vector<int> targets;
  if (mode.kind == AttackKind::kLureLabel) {
    targets.push_back(mode.target_label);
  } else {
    for (int c = 0; c < k; ++c) targets.push_back(c);
  }

  std::vector<std::vector<PairwiseSolution>> groups(static_cast<std::size_t>(k));
  std::vector<double> alpha(neighbors.size());
  for (std::size_t n = 0; n < neighbors.size(); ++n) {
    const Index j = neighbors[n];
    alpha[n] = ctx.op().alpha(i, j);
    const int clean = ctx.clean_label(j);
    if (mode.kind == AttackKind::kDegradeLabel && clean != mode.target_label) continue;
    auto sol = optimal_pair_perturbation(m, alpha[n], x_i, ctx.clean_logits(j), i, j, targets, ctx.domain());
    if (!sol) continue;
    if (audit) audit->push_back(*sol);
    groups[static_cast<std::size_t>(sol->target_label)].push_back(std::move(*sol));
  }

  CandidateScore best;
  best.candidate = i;

  std::vector<std::pair<std::optional<int>, std::vector<PairwiseSolution>>> merged;
  if (mode.consistency) {
    for (int c = 0; c < k; ++c) {
      auto& g = groups[static_cast<std::size_t>(c)];
      best.pairwise_count = std::max(best.pairwise_count, g.size());
      if (!g.empty()) merged.emplace_back(c, std::move(g));
    }
  } else {
    std::vector<PairwiseSolution> pooled;
    for (auto& g : groups) std::move(g.begin(), g.end(), std::back_inserter(pooled));
    best.pairwise_count = pooled.size();
    if (!pooled.empty()) merged.emplace_back(std::nullopt, std::move(pooled));
  }

  for (const auto& [label, solutions] : merged) {
    FeaturePerturbation final_eps = aggregate_final_perturbation(solutions, ctx.domain(), x_i);
    if (final_eps.empty()) continue;
    NodeSet affected;
    for (std::size_t n = 0; n < neighbors.size(); ++n) {
      const Index j = neighbors[n];
      const int perturbed = argmax_lowest(perturbed_logits(m, ctx.clean_logits(j), alpha[n], final_eps));
      if (qualifies(mode, label, ctx.clean_label(j), perturbed)) affected.push_back(j);
    }
    if (affected.size() > best.score) {
      best.score = affected.size();
      best.affected = std::move(affected);
      best.final_perturbation = std::move(final_eps);
      best.chosen_label = label;
    }
  }
  return best;
}

/// Scores every candidate; output order follows `candidates` regardless of threading.
inline std::vector<CandidateScore> score_candidates(std::span<const Index> candidates,
                                                    const AttackMode& mode, const AttackContext& ctx,
                                                    unsigned threads = 1,
                                                    std::vector<PairwiseSolution>* audit = nullptr) {
  std::vector<CandidateScore> out(candidates.size());
  std::vector<std::vector<PairwiseSolution>> audits(audit ? candidates.size() : 0);
  parallel_for(candidates.size(), threads, [&](std::size_t n) {
    out[n] = score_candidate(candidates[n], mode, ctx, audit ? &audits[n] : nullptr);
  });
  if (audit) {
    for (auto& a : audits) std::move(a.begin(), a.end(), std::back_inserter(*audit));
  }
  return out;
}

struct PlanEntry {
  Index node = 0;
  FeaturePerturbation perturbation;
  NodeSet affected;  // residual affected set at selection time
  std::size_t score = 0;
};

struct AttackPlan {
  std::vector<PlanEntry> selected;
  NodeSet covered;
  std::size_t predicted_impact = 0;
  std::vector<std::string> warnings;
};

/// Greedy maximum coverage: repeatedly take the candidate covering the most not-yet-used
/// affected nodes (ties to the lower node id). Affected sets are not re-optimized.
inline AttackPlan greedy_select(std::span<const CandidateScore> scores, Index node_budget) {
  if (node_budget < 1) throw ConfigError("node budget must be >= 1");
  AttackPlan plan;
  if (scores.empty()) {
    plan.warnings.push_back("empty candidate set; plan is empty");
    return plan;
  }
  Index max_node = 0;
  for (const auto& s : scores) {
    max_node = std::max(max_node, s.candidate);
    for (Index j : s.affected) max_node = std::max(max_node, j);
  }
  std::vector<char> used(std::size_t{max_node} + 1, 0);
  std::vector<char> taken(scores.size(), 0);

  for (Index round = 0; round < node_budget; ++round) {
    std::size_t best = scores.size();
    std::size_t best_residual = 0;
    for (std::size_t n = 0; n < scores.size(); ++n) {
      if (taken[n]) continue;
      std::size_t residual = 0;
      for (Index j : scores[n].affected) residual += used[j] ? 0 : 1;
      if (residual == 0) continue;
      if (residual > best_residual ||
          (residual == best_residual && scores[n].candidate < scores[best].candidate)) {
        best = n;
        best_residual = residual;
      }
    }
    if (best == scores.size()) break;
    taken[best] = 1;
    PlanEntry entry{scores[best].candidate, scores[best].final_perturbation, {}, scores[best].score};
    for (Index j : scores[best].affected) {
      if (!used[j]) {
        used[j] = 1;
        entry.affected.push_back(j);
      }
    }
    plan.selected.push_back(std::move(entry));
  }
  for (std::size_t j = 0; j < used.size(); ++j) {
    if (used[j]) plan.covered.push_back(static_cast<Index>(j));
  }
  plan.predicted_impact = plan.covered.size();
  return plan;
}

/// Most frequent (feature, direction) pairs across every candidate's final
/// perturbation, merged into one template: the feature_budget features with the highest
/// total count (ties to the lower index), each in its majority direction (ties to ub).
inline PerturbationTemplate build_global_perturbation_ablation(std::span<const CandidateScore> scores,
                                                               Index feature_budget) {
  struct Count {
    std::size_t up = 0, down = 0;
  };
  std::map<Index, Count> counts;
  for (const auto& s : scores) {
    for (const auto& e : s.final_perturbation.entries) {
      if (e.snap == Snap::kUpper) ++counts[e.feature].up;
      else ++counts[e.feature].down;
    }
  }
  std::vector<std::pair<Index, Count>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second.up + a.second.down > b.second.up + b.second.down;
  });
  if (ranked.size() > feature_budget) ranked.resize(feature_budget);
  PerturbationTemplate t;
  for (const auto& [d, c] : ranked) t.features.emplace_back(d, c.down > c.up ? Snap::kLower : Snap::kUpper);
  std::sort(t.features.begin(), t.features.end());
  return t;
}

}  // namespace advinf

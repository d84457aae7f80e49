#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "advinf/baselines.hpp"
#include "advinf/error.hpp"
#include "advinf/graph.hpp"
#include "advinf/influence.hpp"
#include "advinf/io.hpp"
#include "advinf/metrics.hpp"
#include "advinf/perturb.hpp"
#include "advinf/rng.hpp"
#include "advinf/surrogate.hpp"
#include "advinf/victim.hpp"

namespace advinf {

using Json = nlohmann::ordered_json;

struct AttackConfig {
  std::string edge_path;
  std::string feature_path;
  std::string label_path;
  std::string split_path;  // optional fixed split; otherwise re-drawn per trial
  FeatureKind feature_kind = FeatureKind::kBinary;
  std::optional<int> num_labels;

  AttackMode mode;
  double node_budget_fraction = 0.01;
  double feature_budget_fraction = 0.02;
  double degree_remove_fraction = 0.1;
  int depth = 2;
  TrainConfig surrogate;
  VictimConfig victim;
  BoundsPolicy bounds = BoundsPolicy::kGlobalMinMax;
  int proxies = 20;
  int trials = 1;
  std::uint64_t base_seed = 0;
  unsigned threads = 1;

  void validate() const {
    if (!(node_budget_fraction > 0.0 && node_budget_fraction < 1.0)) throw ConfigError("node budget fraction must lie in (0, 1)");
    if (!(feature_budget_fraction > 0.0 && feature_budget_fraction < 1.0))
      throw ConfigError("feature budget fraction must lie in (0, 1)");
    if (!(degree_remove_fraction >= 0.0 && degree_remove_fraction < 1.0))
      throw ConfigError("degree removal fraction must lie in [0, 1)");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (depth < 1) throw ConfigError("depth must be >= 1");
    if (proxies < 1) throw ConfigError("proxies must be >= 1");
    surrogate.validate();
    victim.validate();
  }
};

/// max(1, floor(fraction * N)).
inline Index node_budget_from_fraction(double fraction, Index num_nodes) {
  return std::max<Index>(1, static_cast<Index>(std::floor(fraction * num_nodes + 1e-9)));
}

inline std::string ablation_name(const AttackMode& mode) {
  if (mode.global_perturbation) return "global";
  if (!mode.consistency) return "inconsistency";
  return "none";
}

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  std::string method;  // "influence" or a baseline name
  bool ok = true;
  std::string error;
  Index node_budget = 0;
  Index feature_budget = 0;
  Metrics clean;
  Metrics attacked;
  std::size_t predicted_impact = 0;
  NodeSet selected;
};

struct TrialResult {
  TrialRecord record;
  AttackPlan plan;  // empty for baselines
  std::vector<std::pair<Index, FeaturePerturbation>> perturbations;
  std::vector<PairwiseSolution> audit;  // filled when requested
  std::optional<SurrogateModel> surrogate;  // kept alongside the audit
};

struct TrialOptions {
  bool collect_audit = false;
  std::optional<SplitAssignment> fixed_splits;
  std::function<void(const TrialResult&)> observer;  // sees every trial, failed ones included
};

namespace detail {

inline std::vector<std::pair<Index, FeaturePerturbation>> instantiate_everywhere(const PerturbationTemplate& t,
                                                                                const Matrix& x,
                                                                                const PerturbationDomain& dom,
                                                                                std::span<const Index> nodes) {
  std::vector<std::pair<Index, FeaturePerturbation>> out;
  for (Index i : nodes) out.emplace_back(i, t.instantiate(x.row(i), dom));
  return out;
}

}  // namespace detail

/// One isolated trial: everything random is derived from (base_seed + trial, purpose),
/// so a trial reproduces on its own and the attack and each baseline see the same
/// split and victim for the same trial index.
inline TrialResult run_trial(const Graph& g, const AttackConfig& cfg, int trial,
                             std::optional<BaselineKind> baseline = std::nullopt, const TrialOptions& opts = {}) {
  TrialResult result;
  TrialRecord& rec = result.record;
  rec.trial = trial;
  rec.seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
  rec.method = baseline ? std::string(to_string(*baseline)) : "influence";
  rec.node_budget = node_budget_from_fraction(cfg.node_budget_fraction, g.num_nodes());
  rec.feature_budget = feature_budget_from_fraction(cfg.feature_budget_fraction, g.num_features());

  const SplitAssignment splits = opts.fixed_splits ? *opts.fixed_splits : make_splits(g, derive_seed(rec.seed, 0, "split"));
  VictimConfig victim_cfg = cfg.victim;
  victim_cfg.seed = derive_seed(rec.seed, 0, "victim");
  const PropagationOperator op = propagation_operator(g, cfg.depth);
  const VictimGcn victim = train_victim(g, op.hat_a, splits.train, splits.validation, victim_cfg);
  const NodeSet candidates = candidate_filter(g, cfg.degree_remove_fraction);
  const PerturbationDomain dom = PerturbationDomain::from_policy(cfg.bounds, g.features(), rec.feature_budget);

  if (baseline) {
    const NodeSet nodes = select_baseline_nodes({*baseline, derive_seed(rec.seed, 0, "random-baseline")}, candidates,
                                                rec.node_budget, g);
    const PerturbationTemplate t = baseline_global_perturbation(g, splits, dom, cfg.proxies, cfg.victim,
                                                                derive_seed(rec.seed, 0, "proxy"), cfg.threads);
    result.perturbations = detail::instantiate_everywhere(t, g.features(), dom, nodes);
  } else {
    cfg.mode.validate(g.num_labels());
    TrainConfig sc = cfg.surrogate;
    sc.seed = derive_seed(rec.seed, 0, "surrogate");
    const Matrix s = propagate_features(op, g.features());
    const SurrogateModel model = train_surrogate(s, g.labels(), splits.train, g.num_labels(), sc, cfg.depth);
    const AttackContext ctx(model, op, g.features(), dom);
    const auto scores = score_candidates(candidates, cfg.mode, ctx, cfg.threads, opts.collect_audit ? &result.audit : nullptr);
    if (opts.collect_audit) result.surrogate = model;
    result.plan = greedy_select(scores, rec.node_budget);
    rec.predicted_impact = result.plan.predicted_impact;
    if (cfg.mode.global_perturbation) {
      const PerturbationTemplate t = build_global_perturbation_ablation(scores, rec.feature_budget);
      NodeSet nodes;
      for (const auto& e : result.plan.selected) nodes.push_back(e.node);
      result.perturbations = detail::instantiate_everywhere(t, g.features(), dom, nodes);
    } else {
      for (const auto& e : result.plan.selected) result.perturbations.emplace_back(e.node, e.perturbation);
    }
  }

  if (result.perturbations.size() > rec.node_budget) throw InvariantViolation("plan exceeds the node budget");
  Matrix attacked_x = g.features();
  for (const auto& [node, eps] : result.perturbations) {
    apply_perturbation_inplace(attacked_x, node, eps, dom, g.feature_kind());
    rec.selected.push_back(node);
  }
  const Graph attacked = g.with_features(std::move(attacked_x));
  std::tie(rec.clean, rec.attacked) = evaluate_attack(victim, g, attacked, splits);
  return result;
}

/// Runs the trial but converts module errors into a failed record.
inline TrialResult run_trial_guarded(const Graph& g, const AttackConfig& cfg, int trial,
                                     std::optional<BaselineKind> baseline = std::nullopt,
                                     const TrialOptions& opts = {}) {
  try {
    return run_trial(g, cfg, trial, baseline, opts);
  } catch (const Error& e) {
    TrialResult r;
    r.record.trial = trial;
    r.record.seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
    r.record.method = baseline ? std::string(to_string(*baseline)) : "influence";
    r.record.ok = false;
    r.record.error = e.what();
    return r;
  }
}

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Sample standard deviation; 0 for a single value.
inline MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

struct Report {
  AttackConfig config;
  std::vector<TrialRecord> records;

  std::size_t failed() const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.ok; }));
  }

  std::vector<double> collect(double Metrics::*field, bool attacked) const {
    std::vector<double> out;
    for (const auto& r : records) {
      if (r.ok) out.push_back((attacked ? r.attacked : r.clean).*field);
    }
    return out;
  }

  MeanStd clean_accuracy() const {
    const auto v = collect(&Metrics::accuracy, false);
    return mean_std(v);
  }
  MeanStd attacked_accuracy() const {
    const auto v = collect(&Metrics::accuracy, true);
    return mean_std(v);
  }
};

inline Json to_json(const MeanStd& m) { return Json{{"mean", m.mean}, {"stddev", m.stddev}}; }

inline Json to_json(const TrialRecord& r, const AttackConfig& cfg) {
  Json j;
  j["trial"] = r.trial;
  j["seed"] = r.seed;
  j["mode"] = std::string(to_string(cfg.mode.kind));
  j["target_label"] = cfg.mode.target_label;
  j["ablation"] = ablation_name(cfg.mode);
  j["method"] = r.method;
  j["B_n"] = r.node_budget;
  j["B_f"] = r.feature_budget;
  j["degree_fraction"] = cfg.degree_remove_fraction;
  j["ok"] = r.ok;
  if (!r.ok) {
    j["error"] = r.error;
    return j;
  }
  j["clean_accuracy"] = r.clean.accuracy;
  j["attacked_accuracy"] = r.attacked.accuracy;
  j["per_label_accuracy"] = r.attacked.per_label_accuracy;
  j["misclassification_rate"] = r.attacked.misclassification_rate_toward;
  j["clean_per_label_accuracy"] = r.clean.per_label_accuracy;
  j["clean_misclassification_rate"] = r.clean.misclassification_rate_toward;
  j["n_test"] = r.attacked.n_test;
  j["predicted_impact"] = r.predicted_impact;
  j["selected"] = r.selected;
  return j;
}

inline Json aggregate_json(const Report& report) {
  const auto& cfg = report.config;
  Json j;
  j["mode"] = std::string(to_string(cfg.mode.kind));
  j["target_label"] = cfg.mode.target_label;
  j["ablation"] = ablation_name(cfg.mode);
  j["method"] = report.records.empty() ? "influence" : report.records.front().method;
  j["trials"] = report.records.size();
  j["failed"] = report.failed();
  j["base_seed"] = cfg.base_seed;
  j["node_budget_fraction"] = cfg.node_budget_fraction;
  j["feature_budget_fraction"] = cfg.feature_budget_fraction;
  j["degree_fraction"] = cfg.degree_remove_fraction;
  j["clean_accuracy"] = to_json(report.clean_accuracy());
  j["attacked_accuracy"] = to_json(report.attacked_accuracy());
  std::vector<double> impact;
  std::vector<double> per_label, misclass;
  std::size_t ok = 0;
  for (const auto& r : report.records) {
    if (!r.ok) continue;
    ++ok;
    impact.push_back(static_cast<double>(r.predicted_impact));
    if (per_label.empty()) {
      per_label.assign(r.attacked.per_label_accuracy.size(), 0.0);
      misclass.assign(r.attacked.misclassification_rate_toward.size(), 0.0);
    }
    for (std::size_t c = 0; c < per_label.size(); ++c) {
      per_label[c] += r.attacked.per_label_accuracy[c];
      misclass[c] += r.attacked.misclassification_rate_toward[c];
    }
  }
  for (auto& v : per_label) v /= static_cast<double>(std::max<std::size_t>(ok, 1));
  for (auto& v : misclass) v /= static_cast<double>(std::max<std::size_t>(ok, 1));
  j["predicted_impact"] = to_json(mean_std(impact));
  j["per_label_accuracy"] = per_label;
  j["misclassification_rate"] = misclass;
  return j;
}

/// Trials base_seed, base_seed+1, ...; failed trials are recorded, never thrown.
inline Report run_attack(const Graph& g, const AttackConfig& cfg, std::optional<BaselineKind> baseline = std::nullopt,
                         const TrialOptions& opts = {}) {
  cfg.validate();
  Report report;
  report.config = cfg;
  for (int t = 0; t < cfg.trials; ++t) {
    TrialResult r = run_trial_guarded(g, cfg, t, baseline, opts);
    if (opts.observer) opts.observer(r);
    report.records.push_back(std::move(r.record));
  }
  return report;
}

inline Report run_baseline(const Graph& g, const AttackConfig& cfg, BaselineKind method, const TrialOptions& opts = {}) {
  return run_attack(g, cfg, method, opts);
}

enum class SweepAxis { kNodeBudget, kFeatureBudget };

inline SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "node_budget" || s == "node-budget") return SweepAxis::kNodeBudget;
  if (s == "feature_budget" || s == "feature-budget") return SweepAxis::kFeatureBudget;
  throw ConfigError("unknown sweep axis '" + std::string(s) + "'");
}

struct SweepPoint {
  double value = 0.0;
  MeanStd accuracy;
  Report report;
};

inline std::vector<SweepPoint> run_sweep(const Graph& g, const AttackConfig& cfg, SweepAxis axis,
                                         std::span<const double> values, const TrialOptions& opts = {}) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (!std::is_sorted(values.begin(), values.end())) throw ConfigError("sweep values must be sorted ascending");
  std::vector<SweepPoint> out;
  for (double v : values) {
    AttackConfig c = cfg;
    (axis == SweepAxis::kNodeBudget ? c.node_budget_fraction : c.feature_budget_fraction) = v;
    SweepPoint p;
    p.value = v;
    p.report = run_attack(g, c, std::nullopt, opts);
    p.accuracy = p.report.attacked_accuracy();
    out.push_back(std::move(p));
  }
  return out;
}

inline void write_report(const Report& report, const std::filesystem::path& dir) {
  {
    auto out = detail::open_out(dir / "trials.jsonl");
    for (const auto& r : report.records) out << to_json(r, report.config).dump() << '\n';
  }
  auto out = detail::open_out(dir / "aggregate.json");
  out << aggregate_json(report).dump(2) << '\n';
}

inline void write_sweep_csv(const std::vector<SweepPoint>& points, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "value,mean_accuracy,stddev\n";
  for (const auto& p : points)
    out << format_double(p.value) << ',' << format_double(p.accuracy.mean) << ',' << format_double(p.accuracy.stddev) << '\n';
}

}  // namespace advinf

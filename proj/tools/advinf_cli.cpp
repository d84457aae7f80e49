#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advinf/advinf.hpp"

namespace fs = std::filesystem;
using namespace advinf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitTrials = 2;

struct Options {
  std::string config_path;
  std::vector<std::string> sets;  // key=value overrides
  std::optional<std::string> edges, features, labels, splits, mode, ablation, bounds, feature_kind;
  std::optional<int> target_label, trials, num_labels, proxies;
  std::optional<double> node_budget, feature_budget, degree_remove;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out_dir = "advinf-out";
  bool dump = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("-c,--config", o.config_path, "key=value config file");
  cmd->add_option("--set", o.sets, "extra key=value override (repeatable)");
  cmd->add_option("--edges", o.edges, "edge list file");
  cmd->add_option("--features", o.features, "feature CSV");
  cmd->add_option("--labels", o.labels, "label file, one per line");
  cmd->add_option("--splits", o.splits, "fixed split CSV (node,split)");
  cmd->add_option("--feature-kind", o.feature_kind, "binary | bounded | continuous");
  cmd->add_option("--num-labels", o.num_labels, "number of labels (default: max label + 1)");
  cmd->add_option("--mode", o.mode, "untargeted | degrade | lure");
  cmd->add_option("--target-label", o.target_label, "label for degrade/lure modes");
  cmd->add_option("--node-budget", o.node_budget, "node budget as a fraction of N");
  cmd->add_option("--feature-budget", o.feature_budget, "feature budget as a fraction of D");
  cmd->add_option("--degree-remove", o.degree_remove, "fraction of highest-degree nodes excluded");
  cmd->add_option("--trials", o.trials, "number of trials");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--ablation", o.ablation, "none | global | inconsistency");
  cmd->add_option("--bounds", o.bounds, "binary | global-minmax | per-feature");
  cmd->add_option("--proxies", o.proxies, "proxy models for baseline gradients");
  cmd->add_option("--threads", o.threads, "worker threads");
  cmd->add_option("-o,--out", o.out_dir, "output directory")->capture_default_str();
  cmd->add_flag("--dump", o.dump, "write per-trial plans and perturbations");
}

AttackConfig resolve(const Options& o) {
  AttackConfig cfg;
  if (!o.config_path.empty()) read_config_file(o.config_path, cfg);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_config_value(cfg, detail::trim(std::string_view(kv).substr(0, eq)), detail::trim(std::string_view(kv).substr(eq + 1)));
  }
  if (o.edges) cfg.edge_path = *o.edges;
  if (o.features) cfg.feature_path = *o.features;
  if (o.labels) cfg.label_path = *o.labels;
  if (o.splits) cfg.split_path = *o.splits;
  if (o.feature_kind) apply_config_value(cfg, "feature_kind", *o.feature_kind);
  if (o.num_labels) cfg.num_labels = *o.num_labels;
  if (o.mode) apply_config_value(cfg, "mode", *o.mode);
  if (o.target_label) cfg.mode.target_label = *o.target_label;
  if (o.node_budget) cfg.node_budget_fraction = *o.node_budget;
  if (o.feature_budget) cfg.feature_budget_fraction = *o.feature_budget;
  if (o.degree_remove) cfg.degree_remove_fraction = *o.degree_remove;
  if (o.trials) cfg.trials = *o.trials;
  if (o.seed) cfg.base_seed = *o.seed;
  if (o.ablation) apply_ablation(cfg.mode, *o.ablation);
  if (o.bounds) apply_config_value(cfg, "bounds", *o.bounds);
  if (o.proxies) cfg.proxies = *o.proxies;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  if (cfg.edge_path.empty() || cfg.feature_path.empty() || cfg.label_path.empty())
    throw ConfigError("edges, features and labels must all be given");
  return cfg;
}

struct Loaded {
  Graph graph;
  TrialOptions options;
};

Loaded load(const AttackConfig& cfg) {
  Graph g = load_graph(cfg.edge_path, cfg.feature_path, cfg.label_path, cfg.feature_kind, cfg.num_labels);
  cfg.mode.validate(g.num_labels());
  TrialOptions opts;
  if (!cfg.split_path.empty()) opts.fixed_splits = read_splits(cfg.split_path, g.num_nodes());
  return {std::move(g), std::move(opts)};
}

void attach_dumper(TrialOptions& opts, const Graph& g, const AttackConfig& cfg, const fs::path& dir) {
  opts.observer = [&g, &cfg, dir](const TrialResult& r) {
    if (!r.record.ok) return;
    const std::string tag = r.record.method + "_t" + std::to_string(r.record.trial);
    if (r.record.method == "influence")
      write_plan(r.plan, to_string(cfg.mode.kind), r.record.node_budget, r.record.feature_budget, dir / ("plan_" + tag + ".csv"));
    write_perturbations(r.perturbations, g.features(), dir / ("perturbations_" + tag + ".csv"));
  };
}

void print_summary(const Report& report) {
  const auto clean = report.clean_accuracy();
  const auto attacked = report.attacked_accuracy();
  std::printf("trials=%zu failed=%zu clean=%.4f+-%.4f attacked=%.4f+-%.4f\n", report.records.size(), report.failed(),
              clean.mean, clean.stddev, attacked.mean, attacked.stddev);
  for (const auto& r : report.records) {
    if (!r.ok) std::fprintf(stderr, "trial %d failed: %s\n", r.trial, r.error.c_str());
  }
}

int run_report_command(const Options& o, std::optional<BaselineKind> method) {
  const AttackConfig cfg = resolve(o);
  Loaded data = load(cfg);
  const fs::path dir = o.out_dir;
  if (o.dump) attach_dumper(data.options, data.graph, cfg, dir);
  const Report report = run_attack(data.graph, cfg, method, data.options);
  write_report(report, dir);
  print_summary(report);
  return report.failed() ? kExitTrials : kExitOk;
}

int run_sweep_command(const Options& o, const std::string& axis_name, std::vector<double> values) {
  const AttackConfig cfg = resolve(o);
  const SweepAxis axis = parse_sweep_axis(axis_name);
  Loaded data = load(cfg);
  const auto points = run_sweep(data.graph, cfg, axis, values, data.options);
  const fs::path dir = o.out_dir;
  write_sweep_csv(points, dir / "sweep.csv");
  std::size_t failed = 0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    write_report(points[k].report, dir / ("point_" + std::to_string(k)));
    failed += points[k].report.failed();
    std::printf("%s mean=%.4f stddev=%.4f\n", format_double(points[k].value).c_str(), points[k].accuracy.mean,
                points[k].accuracy.stddev);
  }
  return failed ? kExitTrials : kExitOk;
}

int run_inspect(const std::string& plan_path, const std::string& perturbation_path) {
  const PlanSummary plan = read_plan(plan_path);
  std::printf("mode=%s B_n=%u B_f=%u predicted_impact=%zu nodes=%zu\n", plan.mode.c_str(), plan.node_budget,
              plan.feature_budget, plan.predicted_impact, plan.rows.size());
  int violations = 0;
  if (plan.rows.size() > plan.node_budget) {
    std::printf("violation: %zu nodes exceed B_n=%u\n", plan.rows.size(), plan.node_budget);
    ++violations;
  }
  std::size_t residual_sum = 0;
  for (const auto& row : plan.rows) {
    std::printf("%zu node=%u score=%zu residual=%zu\n", row.order, row.node, row.score, row.residual);
    residual_sum += row.residual;
  }
  if (residual_sum != plan.predicted_impact) {
    std::printf("violation: residual sum %zu differs from predicted impact %zu\n", residual_sum, plan.predicted_impact);
    ++violations;
  }
  if (!perturbation_path.empty()) {
    std::map<Index, std::size_t> per_node;
    for (const auto& rec : read_perturbations(perturbation_path)) ++per_node[rec.node];
    for (const auto& [node, count] : per_node) {
      if (count > plan.feature_budget) {
        std::printf("violation: node %u perturbs %zu features, B_f=%u\n", node, count, plan.feature_budget);
        ++violations;
      }
    }
    if (per_node.size() > plan.node_budget) {
      std::printf("violation: perturbations touch %zu nodes, B_n=%u\n", per_node.size(), plan.node_budget);
      ++violations;
    }
  }
  std::printf("%s\n", violations ? "budgets: VIOLATED" : "budgets: ok");
  return violations ? kExitTrials : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box feature-perturbation attacks on graph node classifiers"};
  app.require_subcommand(1);

  Options attack_opts, baseline_opts, sweep_opts;
  auto* attack = app.add_subcommand("attack", "run the influence-driven attack over repeated trials");
  add_common(attack, attack_opts);

  auto* baseline = app.add_subcommand("baseline", "run a centrality baseline with a proxy-gradient template");
  add_common(baseline, baseline_opts);
  std::string method = "random";
  baseline->add_option("--method", method, "random | degree | pagerank | betweenness")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "vary one budget and emit a CSV series");
  add_common(sweep, sweep_opts);
  std::string axis = "node_budget";
  std::vector<double> values;
  sweep->add_option("--axis", axis, "node_budget | feature_budget")->capture_default_str();
  sweep->add_option("--values", values, "ascending budget fractions")->required()->delimiter(',');

  auto* inspect = app.add_subcommand("inspect-plan", "print a plan and check its budgets");
  std::string plan_path, perturbation_path;
  inspect->add_option("plan", plan_path, "plan CSV")->required();
  inspect->add_option("--perturbations", perturbation_path, "perturbation CSV to check against B_f");

  auto* gen = app.add_subcommand("generate-sbm", "write a synthetic stochastic block model graph");
  SbmConfig sbm;
  std::string gen_dir = "sbm";
  gen->add_option("--blocks", sbm.block_sizes, "block sizes")->delimiter(',');
  gen->add_option("--p-in", sbm.p_in)->capture_default_str();
  gen->add_option("--p-out", sbm.p_out)->capture_default_str();
  gen->add_option("--dim", sbm.feature_dim)->capture_default_str();
  gen->add_option("--informative", sbm.informative_bits)->capture_default_str();
  gen->add_option("--p-own", sbm.p_own)->capture_default_str();
  gen->add_option("--p-other", sbm.p_other)->capture_default_str();
  gen->add_option("--p-noise", sbm.p_noise)->capture_default_str();
  gen->add_option("--seed", sbm.seed)->capture_default_str();
  gen->add_option("-o,--out", gen_dir, "output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*attack) return run_report_command(attack_opts, std::nullopt);
    if (*baseline) return run_report_command(baseline_opts, parse_baseline_kind(method));
    if (*sweep) return run_sweep_command(sweep_opts, axis, values);
    if (*inspect) return run_inspect(plan_path, perturbation_path);
    if (*gen) {
      const Graph g = generate_sbm(sbm);
      const fs::path dir = gen_dir;
      write_graph(g, dir / "edges.txt", dir / "features.csv", dir / "labels.txt");
      std::printf("wrote %u nodes, %zu edges to %s\n", g.num_nodes(), g.edges().size(), dir.string().c_str());
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}

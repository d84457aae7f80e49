#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "advinf/error.hpp"
#include "advinf/io.hpp"
#include "advinf/pipeline.hpp"

namespace advinf {

namespace detail {

inline bool parse_bool(std::string_view v, std::string_view key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + std::string(key) + "' expects a boolean, got '" + std::string(v) + "'");
}

template <typename T>
T parse_config_number(std::string_view v, std::string_view key) {
  try {
    return parse_number<T>(v, 0, std::string(key).c_str());
  } catch (const ParseError&) {
    throw ConfigError("'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
  }
}

inline std::string_view unquote(std::string_view v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) return v.substr(1, v.size() - 2);
  return v;
}

}  // namespace detail

/// none | global | inconsistency
inline void apply_ablation(AttackMode& mode, std::string_view name) {
  if (name == "none") {
    mode.consistency = true;
    mode.global_perturbation = false;
  } else if (name == "global" || name == "global_perturbation") {
    mode.consistency = true;
    mode.global_perturbation = true;
  } else if (name == "inconsistency") {
    mode.consistency = false;
    mode.global_perturbation = false;
  } else {
    throw ConfigError("unknown ablation '" + std::string(name) + "'");
  }
}

/// Keys may carry a section prefix ("surrogate.lr" or "lr" under "[surrogate]").
inline void apply_config_value(AttackConfig& cfg, std::string_view key, std::string_view raw) {
  using detail::parse_bool;
  using detail::parse_config_number;
  const std::string_view v = detail::unquote(raw);
  const std::string k(key);
  try {
    if (k == "edges" || k == "data.edges") cfg.edge_path = v;
    else if (k == "features" || k == "data.features") cfg.feature_path = v;
    else if (k == "labels" || k == "data.labels") cfg.label_path = v;
    else if (k == "splits" || k == "data.splits") cfg.split_path = v;
    else if (k == "feature_kind" || k == "data.feature_kind") cfg.feature_kind = parse_feature_kind(v);
    else if (k == "num_labels" || k == "data.num_labels") cfg.num_labels = parse_config_number<int>(v, k);
    else if (k == "mode") cfg.mode.kind = parse_attack_kind(v);
    else if (k == "target_label") cfg.mode.target_label = parse_config_number<int>(v, k);
    else if (k == "consistency") cfg.mode.consistency = parse_bool(v, k);
    else if (k == "global_perturbation") cfg.mode.global_perturbation = parse_bool(v, k);
    else if (k == "inconsistency") cfg.mode.consistency = !parse_bool(v, k);
    else if (k == "ablation") apply_ablation(cfg.mode, v);
    else if (k == "node_budget") cfg.node_budget_fraction = parse_config_number<double>(v, k);
    else if (k == "feature_budget") cfg.feature_budget_fraction = parse_config_number<double>(v, k);
    else if (k == "degree_remove") cfg.degree_remove_fraction = parse_config_number<double>(v, k);
    else if (k == "depth") cfg.depth = parse_config_number<int>(v, k);
    else if (k == "bounds") cfg.bounds = parse_bounds_policy(v);
    else if (k == "proxies") cfg.proxies = parse_config_number<int>(v, k);
    else if (k == "trials") cfg.trials = parse_config_number<int>(v, k);
    else if (k == "seed" || k == "base_seed") cfg.base_seed = parse_config_number<std::uint64_t>(v, k);
    else if (k == "threads") cfg.threads = parse_config_number<unsigned>(v, k);
    else if (k == "surrogate.lr") cfg.surrogate.learning_rate = parse_config_number<double>(v, k);
    else if (k == "surrogate.epochs") cfg.surrogate.epochs = parse_config_number<int>(v, k);
    else if (k == "surrogate.weight_decay") cfg.surrogate.weight_decay = parse_config_number<double>(v, k);
    else if (k == "surrogate.bias") cfg.surrogate.use_bias = parse_bool(v, k);
    else if (k == "surrogate.optimizer") {
      if (v == "adam") cfg.surrogate.optimizer = Optimizer::kAdam;
      else if (v == "gd" || v == "sgd") cfg.surrogate.optimizer = Optimizer::kGradientDescent;
      else throw ConfigError("unknown optimizer '" + std::string(v) + "'");
    } else if (k == "victim.hidden") cfg.victim.hidden = parse_config_number<int>(v, k);
    else if (k == "victim.lr") cfg.victim.learning_rate = parse_config_number<double>(v, k);
    else if (k == "victim.weight_decay") cfg.victim.weight_decay = parse_config_number<double>(v, k);
    else if (k == "victim.patience") cfg.victim.patience = parse_config_number<int>(v, k);
    else if (k == "victim.max_epochs") cfg.victim.max_epochs = parse_config_number<int>(v, k);
    else throw ConfigError("unknown config key '" + k + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("'" + k + "': " + e.what());
  }
}

/// `key = value` lines, '#' comments, optional `[section]` headers.
inline void read_config_file(const std::filesystem::path& path, AttackConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError("malformed section header on line " + std::to_string(line_no));
      section = std::string(detail::trim(text.substr(1, text.size() - 2)));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value on line " + std::to_string(line_no));
    const std::string key(detail::trim(text.substr(0, eq)));
    const auto value = detail::trim(text.substr(eq + 1));
    apply_config_value(cfg, section.empty() || section == "attack" ? key : section + "." + key, value);
  }
}

}  // namespace advinf

#pragma once

#include "advinf/advinf.hpp"

namespace fixture {

/// Two blocks of 200 with weak, overlapping block features: the victim still leans on
/// them, so a handful of perturbed nodes move test predictions.
inline advinf::SbmConfig transfer_sbm(std::uint64_t seed) {
  advinf::SbmConfig c;
  c.block_sizes = {200, 200};
  c.p_in = 0.05;
  c.p_out = 0.005;
  c.feature_dim = 32;
  c.informative_bits = 8;
  c.p_own = 0.04;
  c.p_other = 0.02;
  c.p_noise = 0.01;
  c.seed = seed;
  return c;
}

/// Seven blocks of 100 with sparse 700-dimensional bag-of-words style features.
inline advinf::SbmConfig many_label_sbm(std::uint64_t seed) {
  advinf::SbmConfig c;
  c.block_sizes = std::vector<advinf::Index>(7, 100);
  c.p_in = 0.06;
  c.p_out = 0.003;
  c.feature_dim = 700;
  c.informative_bits = 490;
  c.p_own = 0.03;
  c.p_other = 0.005;
  c.p_noise = 0.005;
  c.seed = seed;
  return c;
}

/// Budgets used with transfer_sbm: 1% of nodes, 10% of features, top 10% degrees excluded.
inline advinf::AttackConfig transfer_config() {
  advinf::AttackConfig cfg;
  cfg.node_budget_fraction = 0.01;
  cfg.feature_budget_fraction = 0.1;
  cfg.degree_remove_fraction = 0.1;
  cfg.bounds = advinf::BoundsPolicy::kBinary;
  return cfg;
}

}  // namespace fixture

#pragma once

#include <cstdint>
#include <vector>

#include "advinf/error.hpp"
#include "advinf/graph.hpp"
#include "advinf/rng.hpp"

namespace advinf {

/// Stochastic block model with binary features. The first `informative_bits` features
/// are split evenly across blocks; a node switches on its own block's bits with
/// probability `p_own` and other blocks' bits with `p_other`. The rest (including any
/// remainder of the split) are noise bits set with `p_noise`. Labels are block ids.
struct SbmConfig {
  std::vector<Index> block_sizes{200, 200};
  double p_in = 0.05;
  double p_out = 0.005;
  Index feature_dim = 32;
  Index informative_bits = 8;
  double p_own = 0.6;
  double p_other = 0.25;
  double p_noise = 0.2;
  std::uint64_t seed = 0;
};

inline Graph generate_sbm(const SbmConfig& cfg) {
  const auto blocks = static_cast<Index>(cfg.block_sizes.size());
  if (blocks == 0) throw ConfigError("SBM needs at least one block");
  if (cfg.informative_bits > cfg.feature_dim) throw ConfigError("more informative bits than features");
  for (double p : {cfg.p_in, cfg.p_out, cfg.p_own, cfg.p_other, cfg.p_noise}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("SBM probabilities must lie in [0, 1]");
  }
  std::vector<int> labels;
  for (Index b = 0; b < blocks; ++b) labels.insert(labels.end(), cfg.block_sizes[b], static_cast<int>(b));
  const auto n = static_cast<Index>(labels.size());

  Rng rng(cfg.seed);
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (rng.bernoulli(labels[i] == labels[j] ? cfg.p_in : cfg.p_out)) edges.push_back({i, j});
    }
  }

  const Index per_block = cfg.informative_bits / blocks;
  Matrix x = Matrix::Zero(n, cfg.feature_dim);
  for (Index i = 0; i < n; ++i) {
    for (Index d = 0; d < cfg.feature_dim; ++d) {
      double p = cfg.p_noise;
      if (per_block > 0 && d < per_block * blocks) {
        p = d / per_block == static_cast<Index>(labels[i]) ? cfg.p_own : cfg.p_other;
      }
      x(i, d) = rng.bernoulli(p) ? 1.0 : 0.0;
    }
  }
  return Graph(n, std::move(edges), std::move(x), std::move(labels), static_cast<int>(blocks), FeatureKind::kBinary);
}

}  // namespace advinf

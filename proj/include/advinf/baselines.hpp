#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advinf/error.hpp"
#include "advinf/graph.hpp"
#include "advinf/parallel.hpp"
#include "advinf/perturbation.hpp"
#include "advinf/rng.hpp"
#include "advinf/victim.hpp"

namespace advinf {

enum class BaselineKind { kRandom, kDegree, kPageRank, kBetweenness };

inline std::string_view to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::kRandom: return "random";
    case BaselineKind::kDegree: return "degree";
    case BaselineKind::kPageRank: return "pagerank";
    case BaselineKind::kBetweenness: return "betweenness";
  }
  return "?";
}

inline BaselineKind parse_baseline_kind(std::string_view s) {
  if (s == "random") return BaselineKind::kRandom;
  if (s == "degree") return BaselineKind::kDegree;
  if (s == "pagerank") return BaselineKind::kPageRank;
  if (s == "betweenness") return BaselineKind::kBetweenness;
  throw ConfigError("unknown baseline method '" + std::string(s) + "'");
}

struct BaselineMethod {
  BaselineKind kind = BaselineKind::kRandom;
  std::uint64_t seed = 0;
};

/// PageRank on the raw adjacency with uniform teleport; dangling mass is spread
/// uniformly. Iterates until the L1 change drops below `tolerance`.
inline std::vector<double> pagerank(const Graph& g, double damping = 0.85, double tolerance = 1e-8,
                                    int max_iterations = 10000) {
  const Index n = g.num_nodes();
  if (n == 0) return {};
  std::vector<double> p(n, 1.0 / n), next(n);
  for (int it = 0; it < max_iterations; ++it) {
    double dangling = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (g.degree(i) == 0) dangling += p[i];
    }
    const double base = (1.0 - damping) / n + damping * dangling / n;
    double change = 0.0;
    for (Index i = 0; i < n; ++i) {
      double in = 0.0;
      for (Index j : g.neighbors(i)) in += p[j] / g.degree(j);
      next[i] = base + damping * in;
      change += std::abs(next[i] - p[i]);
    }
    p.swap(next);
    if (change < tolerance) break;
  }
  return p;
}

/// Brandes' exact betweenness for unweighted undirected graphs; each unordered pair
/// is counted once.
inline std::vector<double> betweenness(const Graph& g) {
  const Index n = g.num_nodes();
  std::vector<double> bc(n, 0.0), sigma(n), delta(n);
  std::vector<std::int64_t> dist(n);
  std::vector<Index> order;
  order.reserve(n);
  for (Index s = 0; s < n; ++s) {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    order.clear();
    sigma[s] = 1.0;
    dist[s] = 0;
    std::queue<Index> queue;
    queue.push(s);
    while (!queue.empty()) {
      const Index v = queue.front();
      queue.pop();
      order.push_back(v);
      for (Index w : g.neighbors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push(w);
        }
        if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const Index w = *it;
      for (Index v : g.neighbors(w)) {
        if (dist[v] == dist[w] - 1) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      }
      if (w != s) bc[w] += delta[w];
    }
  }
  for (double& b : bc) b /= 2.0;
  return bc;
}

/// Top `budget` candidates by the method's score (ties to the lower id); Random draws a
/// seeded uniform sample.
inline NodeSet select_baseline_nodes(const BaselineMethod& method, std::span<const Index> candidates,
                                     Index budget, const Graph& g) {
  std::vector<Index> pool(candidates.begin(), candidates.end());
  const std::size_t take = std::min<std::size_t>(budget, pool.size());
  if (method.kind == BaselineKind::kRandom) {
    Rng rng(method.seed);
    rng.shuffle(std::span<Index>(pool));
    pool.resize(take);
    return pool;
  }
  std::vector<double> score(g.num_nodes());
  switch (method.kind) {
    case BaselineKind::kDegree:
      for (Index i = 0; i < g.num_nodes(); ++i) score[i] = g.degree(i);
      break;
    case BaselineKind::kPageRank: score = pagerank(g); break;
    case BaselineKind::kBetweenness: score = betweenness(g); break;
    case BaselineKind::kRandom: break;
  }
  std::stable_sort(pool.begin(), pool.end(), [&](Index a, Index b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  pool.resize(take);
  return pool;
}

/// Top `budget` features by |gradient| (ties to the lower index), each pushed toward ub
/// when the gradient is non-negative and toward lb otherwise.
inline PerturbationTemplate template_from_gradient(const Vector& gradient, Index budget) {
  std::vector<Index> idx(static_cast<std::size_t>(gradient.size()));
  for (std::size_t d = 0; d < idx.size(); ++d) idx[d] = static_cast<Index>(d);
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    return std::abs(gradient(a)) > std::abs(gradient(b));
  });
  if (idx.size() > budget) idx.resize(budget);
  std::sort(idx.begin(), idx.end());
  PerturbationTemplate t;
  for (Index d : idx) t.features.emplace_back(d, gradient(d) < 0.0 ? Snap::kLower : Snap::kUpper);
  return t;
}

/// Mean over proxies of the node-averaged feature gradient of each proxy's test loss.
inline Vector proxy_average_gradient(const Graph& g, const SplitAssignment& splits, int n_proxies,
                                     const VictimConfig& base, std::uint64_t seed, unsigned threads = 1) {
  if (n_proxies < 1) throw ConfigError("need at least one proxy model");
  const CsrMatrix hat_a = normalized_adjacency(g);
  std::vector<Vector> per_proxy(static_cast<std::size_t>(n_proxies));
  parallel_for(per_proxy.size(), threads, [&](std::size_t p) {
    VictimConfig cfg = base;
    cfg.seed = derive_seed(seed, p, "proxy");
    const VictimGcn proxy = train_victim(g, hat_a, splits.train, splits.validation, cfg);
    const Matrix grad = victim_feature_gradient(proxy, hat_a, g.features(), g.labels(), splits.test);
    per_proxy[p] = grad.colwise().mean().transpose();
  });
  Vector avg = Vector::Zero(g.num_features());
  for (const auto& v : per_proxy) avg += v;
  return avg / static_cast<double>(n_proxies);
}

/// One perturbation template shared by every baseline-selected node.
inline PerturbationTemplate baseline_global_perturbation(const Graph& g, const SplitAssignment& splits,
                                                         const PerturbationDomain& dom, int n_proxies,
                                                         const VictimConfig& base, std::uint64_t seed,
                                                         unsigned threads = 1) {
  return template_from_gradient(proxy_average_gradient(g, splits, n_proxies, base, seed, threads),
                                dom.feature_budget);
}

}  // namespace advinf

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "advinf/error.hpp"
#include "advinf/rng.hpp"
#include "advinf/sparse.hpp"
#include "advinf/types.hpp"

namespace advinf {

enum class FeatureKind { kBinary, kBoundedDiscrete, kContinuous };

inline std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kBinary: return "binary";
    case FeatureKind::kBoundedDiscrete: return "bounded-discrete";
    case FeatureKind::kContinuous: return "continuous";
  }
  return "?";
}

inline FeatureKind parse_feature_kind(std::string_view s) {
  if (s == "binary") return FeatureKind::kBinary;
  if (s == "bounded-discrete" || s == "discrete") return FeatureKind::kBoundedDiscrete;
  if (s == "continuous") return FeatureKind::kContinuous;
  throw ConfigError("unknown feature kind '" + std::string(s) + "'");
}

/// Undirected edge stored with u < v.
struct Edge {
  Index u;
  Index v;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Undirected, unweighted attributed graph. Immutable once built; the constructor
/// canonicalizes the edge list (u < v, sorted, deduplicated) and validates every
/// invariant, so a Graph value is always well-formed.
class Graph {
 public:
  Graph() = default;

  /// `labels` may be empty (unlabeled graph) or hold N entries where kUnlabeled
  /// marks individual unlabeled nodes. Self-loops are rejected.
  Graph(Index num_nodes, std::vector<Edge> edges, Matrix features, std::vector<int> labels = {},
        int num_labels = 0, FeatureKind kind = FeatureKind::kBinary)
      : num_nodes_(num_nodes), features_(std::move(features)), labels_(std::move(labels)),
        num_labels_(num_labels), kind_(kind) {
    if (features_.rows() != static_cast<Eigen::Index>(num_nodes_))
      throw ContractError("feature matrix has " + std::to_string(features_.rows()) +
                          " rows for " + std::to_string(num_nodes_) + " nodes");
    for (Edge& e : edges) {
      if (e.u >= num_nodes_ || e.v >= num_nodes_)
        throw IndexError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                         ") has an endpoint >= " + std::to_string(num_nodes_));
      if (e.u == e.v) throw IndexError("self-loop on node " + std::to_string(e.u));
      if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);

    if (!labels_.empty()) {
      if (labels_.size() != num_nodes_) throw ContractError("label count differs from node count");
      if (num_labels_ <= 0) throw LabelError("labeled graph needs at least one label");
      for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == kUnlabeled) continue;
        if (labels_[i] < 0 || labels_[i] >= num_labels_)
          throw LabelError("node " + std::to_string(i) + " has label " +
                           std::to_string(labels_[i]) + " outside [0," +
                           std::to_string(num_labels_) + ")");
      }
    }
    if (kind_ == FeatureKind::kBinary) {
      for (Eigen::Index k = 0; k < features_.size(); ++k) {
        const double x = features_.data()[k];
        if (x != 0.0 && x != 1.0) throw ContractError("binary feature matrix contains a non-0/1 value");
      }
    }
    if (!features_.allFinite()) throw ContractError("feature matrix contains a non-finite value");

    offsets_.assign(std::size_t{num_nodes_} + 1, 0);
    for (const Edge& e : edges_) {
      ++offsets_[std::size_t{e.u} + 1];
      ++offsets_[std::size_t{e.v} + 1];
    }
    for (std::size_t k = 1; k < offsets_.size(); ++k) offsets_[k] += offsets_[k - 1];
    adjacency_.resize(offsets_.back());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (const Edge& e : edges_) {
      adjacency_[fill[e.u]++] = e.v;
      adjacency_[fill[e.v]++] = e.u;
    }
    for (Index i = 0; i < num_nodes_; ++i)
      std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
  }

  Index num_nodes() const noexcept { return num_nodes_; }
  Index num_features() const noexcept { return static_cast<Index>(features_.cols()); }
  int num_labels() const noexcept { return num_labels_; }
  FeatureKind feature_kind() const noexcept { return kind_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Matrix& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  bool has_labels() const noexcept { return !labels_.empty(); }

  /// Raw degree, without self-loop.
  Index degree(Index i) const { return static_cast<Index>(offsets_[i + 1] - offsets_[i]); }

  std::span<const Index> neighbors(Index i) const {
    return {adjacency_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

  /// Same structure and labels, different features. Used to build the attacked graph.
  Graph with_features(Matrix features) const {
    return Graph(num_nodes_, edges_, std::move(features), labels_, num_labels_, kind_);
  }

  bool same_structure(const Graph& other) const {
    return num_nodes_ == other.num_nodes_ && edges_ == other.edges_ &&
           features_.cols() == other.features_.cols() && labels_ == other.labels_;
  }

 private:
  Index num_nodes_ = 0;
  std::vector<Edge> edges_;
  Matrix features_;
  std::vector<int> labels_;
  int num_labels_ = 0;
  FeatureKind kind_ = FeatureKind::kContinuous;
  std::vector<std::size_t> offsets_{0};
  std::vector<Index> adjacency_;
};

/// D^-1/2 (A + I) D^-1/2 where D counts the self-loop.
inline CsrMatrix normalized_adjacency(const Graph& g) {
  const Index n = g.num_nodes();
  std::vector<double> inv_sqrt(n);
  for (Index i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(i) + 1));

  std::vector<std::size_t> row_ptr(std::size_t{n} + 1, 0);
  std::vector<Index> col;
  std::vector<double> val;
  col.reserve(2 * g.edges().size() + n);
  val.reserve(col.capacity());
  for (Index i = 0; i < n; ++i) {
    bool self_done = false;
    for (Index j : g.neighbors(i)) {
      if (!self_done && j > i) {
        col.push_back(i);
        val.push_back(inv_sqrt[i] * inv_sqrt[i]);
        self_done = true;
      }
      col.push_back(j);
      val.push_back(inv_sqrt[i] * inv_sqrt[j]);
    }
    if (!self_done) {
      col.push_back(i);
      val.push_back(inv_sqrt[i] * inv_sqrt[i]);
    }
    row_ptr[std::size_t{i} + 1] = col.size();
  }
  return CsrMatrix(n, n, std::move(row_ptr), std::move(col), std::move(val));
}

/// One-step normalized adjacency and its L-th power. Entry (k, j) of `powered` is the
/// weight with which node k's features reach node j after L propagation steps.
struct PropagationOperator {
  CsrMatrix hat_a;
  CsrMatrix powered;
  int depth = 0;

  double alpha(Index from, Index to) const { return powered.at(to, from); }
  Index num_nodes() const noexcept { return hat_a.rows(); }
};

inline PropagationOperator propagation_operator(const Graph& g, int depth) {
  if (depth < 1) throw ConfigError("propagation depth must be >= 1, got " + std::to_string(depth));
  PropagationOperator op;
  op.hat_a = normalized_adjacency(g);
  op.powered = op.hat_a;
  for (int l = 1; l < depth; ++l) op.powered = multiply(op.powered, op.hat_a);
  op.depth = depth;
  return op;
}

/// Nodes j != i whose propagated representation receives a positive share of node i's
/// features.
inline NodeSet receptive_neighbors(const PropagationOperator& op, Index i) {
  if (i >= op.num_nodes()) throw IndexError("node " + std::to_string(i) + " out of range");
  NodeSet out;
  // powered is symmetric, so row i lists the same nodes as column i.
  auto cols = op.powered.row_cols(i);
  auto vals = op.powered.row_vals(i);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] != i && vals[k] > 0.0) out.push_back(cols[k]);
  }
  return out;
}

/// Largest degree kept when the top `remove_top_fraction` of nodes by degree are dropped.
inline Index degree_threshold(std::span<const Index> degrees, double remove_top_fraction) {
  if (!(remove_top_fraction >= 0.0 && remove_top_fraction < 1.0))
    throw ConfigError("degree removal fraction must lie in [0, 1)");
  if (degrees.empty()) return 0;
  std::vector<Index> sorted(degrees.begin(), degrees.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<Index>(sorted.size());
  const auto n_remove = static_cast<Index>(std::floor(remove_top_fraction * n + 1e-9));
  return sorted[n - 1 - std::min(n_remove, n - 1)];
}

/// Removes nodes whose degree exceeds the (1 - fraction) degree quantile. Nodes tied
/// at the threshold are kept.
inline NodeSet candidate_filter(const Graph& g, double remove_top_fraction) {
  const Index n = g.num_nodes();
  std::vector<Index> degrees(n);
  for (Index i = 0; i < n; ++i) degrees[i] = g.degree(i);
  const Index threshold = degree_threshold(degrees, remove_top_fraction);
  NodeSet out;
  for (Index i = 0; i < n; ++i) {
    if (degrees[i] <= threshold) out.push_back(i);
  }
  return out;
}

struct SplitAssignment {
  NodeSet train;
  NodeSet validation;
  NodeSet test;
  std::uint64_t seed = 0;
};

/// Seeded shuffle of the labeled nodes, then a 60/20/20 cut (floors for train and
/// validation, remainder to test).
inline SplitAssignment make_splits(const Graph& g, std::uint64_t seed) {
  if (!g.has_labels()) throw LabelError("cannot split an unlabeled graph");
  std::vector<Index> labeled;
  for (Index i = 0; i < g.num_nodes(); ++i) {
    if (g.labels()[i] != kUnlabeled) labeled.push_back(i);
  }
  if (labeled.empty()) throw LabelError("cannot split a graph with no labeled nodes");
  Rng rng(seed);
  rng.shuffle(std::span<Index>(labeled));
  const std::size_t n = labeled.size();
  const std::size_t n_train = (n * 3) / 5;
  const std::size_t n_val = n / 5;
  SplitAssignment s;
  s.seed = seed;
  s.train.assign(labeled.begin(), labeled.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(labeled.begin() + static_cast<std::ptrdiff_t>(n_train),
                      labeled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(labeled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), labeled.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace advinf

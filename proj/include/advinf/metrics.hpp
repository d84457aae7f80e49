#pragma once

#include <span>
#include <utility>
#include <vector>

#include "advinf/error.hpp"
#include "advinf/graph.hpp"
#include "advinf/victim.hpp"

namespace advinf {

struct Metrics {
  double accuracy = 0.0;
  std::vector<double> per_label_accuracy;  // 0 for labels absent from the test split
  std::vector<std::size_t> per_label_count;
  /// Fraction of test nodes predicted as label k whose true label is not k.
  std::vector<double> misclassification_rate_toward;
  std::size_t n_test = 0;
};

inline Metrics compute_metrics(std::span<const int> predicted, std::span<const int> truth,
                               std::span<const Index> test, int num_labels) {
  Metrics m;
  const auto k = static_cast<std::size_t>(num_labels);
  m.per_label_accuracy.assign(k, 0.0);
  m.per_label_count.assign(k, 0);
  m.misclassification_rate_toward.assign(k, 0.0);
  std::vector<std::size_t> hits(k, 0), toward(k, 0);
  std::size_t correct = 0;
  for (Index r : test) {
    const int y = truth[r];
    if (y == kUnlabeled) throw LabelError("test node " + std::to_string(r) + " is unlabeled");
    const int p = predicted[r];
    ++m.per_label_count[y];
    if (p == y) {
      ++correct;
      ++hits[y];
    } else {
      ++toward[p];
    }
    ++m.n_test;
  }
  if (m.n_test == 0) return m;
  const double n = static_cast<double>(m.n_test);
  m.accuracy = static_cast<double>(correct) / n;
  for (std::size_t c = 0; c < k; ++c) {
    if (m.per_label_count[c]) m.per_label_accuracy[c] = static_cast<double>(hits[c]) / m.per_label_count[c];
    m.misclassification_rate_toward[c] = static_cast<double>(toward[c]) / n;
  }
  return m;
}

/// Evasion evaluation: the already-trained victim is applied to both graphs.
inline std::pair<Metrics, Metrics> evaluate_attack(const VictimGcn& v, const Graph& clean, const Graph& attacked,
                                                   const SplitAssignment& splits) {
  if (!clean.same_structure(attacked))
    throw ContractError("attacked graph differs from the clean graph in structure or labels");
  const CsrMatrix hat_a = normalized_adjacency(clean);
  const auto clean_pred = victim_predict(v, hat_a, clean.features());
  const auto attacked_pred = victim_predict(v, hat_a, attacked.features());
  return {compute_metrics(clean_pred, clean.labels(), splits.test, clean.num_labels()),
          compute_metrics(attacked_pred, clean.labels(), splits.test, clean.num_labels())};
}

}  // namespace advinf

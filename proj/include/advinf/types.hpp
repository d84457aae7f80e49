#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace advinf {

using Index = std::uint32_t;

/// Node features, propagated features and weight matrices are row-major so that a
/// node's row is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Sorted, duplicate-free list of node indices.
using NodeSet = std::vector<Index>;

inline constexpr int kUnlabeled = -1;

/// Argmax with ties resolved toward the lowest index.
template <typename Derived>
int argmax_lowest(const Eigen::DenseBase<Derived>& v) {
  int best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k) {
    if (v(k) > v(best)) best = static_cast<int>(k);
  }
  return best;
}

}  // namespace advinf

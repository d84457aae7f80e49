#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "advinf/error.hpp"
#include "advinf/types.hpp"

namespace advinf {

/// Compressed sparse row matrix. Column indices within a row are strictly increasing.
class CsrMatrix {
 public:
  CsrMatrix() = default;

  CsrMatrix(Index rows, Index cols, std::vector<std::size_t> row_ptr, std::vector<Index> col,
            std::vector<double> val)
      : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_(std::move(col)),
        val_(std::move(val)) {
    assert(row_ptr_.size() == std::size_t{rows_} + 1);
    assert(col_.size() == val_.size());
  }

  /// Builds from unsorted (row, col, value) triplets; duplicates are summed.
  static CsrMatrix from_triplets(Index rows, Index cols,
                                 std::vector<std::tuple<Index, Index, double>> triplets) {
    std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
      return std::pair(std::get<0>(a), std::get<1>(a)) < std::pair(std::get<0>(b), std::get<1>(b));
    });
    std::vector<std::size_t> row_ptr(std::size_t{rows} + 1, 0);
    std::vector<Index> col;
    std::vector<double> val;
    Index last_r = 0;
    bool any = false;
    for (const auto& [r, c, v] : triplets) {
      if (r >= rows || c >= cols) throw IndexError("triplet outside matrix shape");
      if (any && r == last_r && col.back() == c) {
        val.back() += v;
        continue;
      }
      col.push_back(c);
      val.push_back(v);
      ++row_ptr[std::size_t{r} + 1];
      last_r = r;
      any = true;
    }
    for (std::size_t r = 1; r < row_ptr.size(); ++r) row_ptr[r] += row_ptr[r - 1];
    return CsrMatrix(rows, cols, std::move(row_ptr), std::move(col), std::move(val));
  }

  /// Keeps entries that are not exactly zero.
  static CsrMatrix from_dense(const Matrix& dense) {
    std::vector<std::size_t> row_ptr(static_cast<std::size_t>(dense.rows()) + 1, 0);
    std::vector<Index> col;
    std::vector<double> val;
    for (Eigen::Index r = 0; r < dense.rows(); ++r) {
      for (Eigen::Index c = 0; c < dense.cols(); ++c) {
        if (dense(r, c) != 0.0) {
          col.push_back(static_cast<Index>(c));
          val.push_back(dense(r, c));
        }
      }
      row_ptr[r + 1] = col.size();
    }
    return CsrMatrix(static_cast<Index>(dense.rows()), static_cast<Index>(dense.cols()),
                     std::move(row_ptr), std::move(col), std::move(val));
  }

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  std::size_t nonzeros() const noexcept { return val_.size(); }

  std::span<const Index> row_cols(Index r) const {
    return {col_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_vals(Index r) const {
    return {val_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> values() const noexcept { return val_; }

  /// Stored value or 0.
  double at(Index r, Index c) const {
    auto cols = row_cols(r);
    auto it = std::lower_bound(cols.begin(), cols.end(), c);
    if (it == cols.end() || *it != c) return 0.0;
    return row_vals(r)[static_cast<std::size_t>(it - cols.begin())];
  }

  Matrix to_dense() const {
    Matrix out = Matrix::Zero(rows_, cols_);
    for (Index r = 0; r < rows_; ++r) {
      auto cols = row_cols(r);
      auto vals = row_vals(r);
      for (std::size_t k = 0; k < cols.size(); ++k) out(r, cols[k]) = vals[k];
    }
    return out;
  }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Index> col_;
  std::vector<double> val_;
};

/// Sparse product with a dense accumulator per row (Gustavson). Output columns are
/// emitted in increasing order; structural zeros never appear.
inline CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.cols() != b.rows()) throw ContractError("sparse product: inner dimensions differ");
  std::vector<std::size_t> row_ptr(std::size_t{a.rows()} + 1, 0);
  std::vector<Index> col;
  std::vector<double> val;
  std::vector<double> acc(b.cols(), 0.0);
  std::vector<char> touched(b.cols(), 0);
  std::vector<Index> pattern;
  for (Index r = 0; r < a.rows(); ++r) {
    pattern.clear();
    auto acols = a.row_cols(r);
    auto avals = a.row_vals(r);
    for (std::size_t k = 0; k < acols.size(); ++k) {
      const Index mid = acols[k];
      auto bcols = b.row_cols(mid);
      auto bvals = b.row_vals(mid);
      for (std::size_t q = 0; q < bcols.size(); ++q) {
        if (!touched[bcols[q]]) {
          touched[bcols[q]] = 1;
          pattern.push_back(bcols[q]);
        }
        acc[bcols[q]] += avals[k] * bvals[q];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    for (Index c : pattern) {
      col.push_back(c);
      val.push_back(acc[c]);
      acc[c] = 0.0;
      touched[c] = 0;
    }
    row_ptr[r + 1] = col.size();
  }
  return CsrMatrix(a.rows(), b.cols(), std::move(row_ptr), std::move(col), std::move(val));
}

/// a * dense
inline Matrix multiply(const CsrMatrix& a, const Matrix& dense) {
  if (a.cols() != dense.rows()) throw ContractError("sparse-dense product: inner dimensions differ");
  Matrix out = Matrix::Zero(a.rows(), dense.cols());
  for (Index r = 0; r < a.rows(); ++r) {
    auto cols = a.row_cols(r);
    auto vals = a.row_vals(r);
    for (std::size_t k = 0; k < cols.size(); ++k) out.row(r).noalias() += vals[k] * dense.row(cols[k]);
  }
  return out;
}

/// a^T * dense, without forming the transpose.
inline Matrix multiply_transposed(const CsrMatrix& a, const Matrix& dense) {
  if (a.rows() != dense.rows()) throw ContractError("sparse^T-dense product: dimensions differ");
  Matrix out = Matrix::Zero(a.cols(), dense.cols());
  for (Index r = 0; r < a.rows(); ++r) {
    auto cols = a.row_cols(r);
    auto vals = a.row_vals(r);
    for (std::size_t k = 0; k < cols.size(); ++k) out.row(cols[k]).noalias() += vals[k] * dense.row(r);
  }
  return out;
}

/// Row r of (a * dense).
inline Eigen::RowVectorXd multiply_row(const CsrMatrix& a, Index r, const Matrix& dense) {
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(dense.cols());
  auto cols = a.row_cols(r);
  auto vals = a.row_vals(r);
  for (std::size_t k = 0; k < cols.size(); ++k) out.noalias() += vals[k] * dense.row(cols[k]);
  return out;
}

}  // namespace advinf

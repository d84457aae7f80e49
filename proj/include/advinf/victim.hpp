#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advinf/error.hpp"
#include "advinf/graph.hpp"
#include "advinf/rng.hpp"
#include "advinf/sparse.hpp"
#include "advinf/types.hpp"

namespace advinf {

struct VictimConfig {
  int hidden = 16;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  int patience = 30;
  int max_epochs = 300;
  std::uint64_t seed = 0;

  void validate() const {
    if (hidden < 1) throw ConfigError("victim hidden size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("victim learning rate must be > 0");
    if (max_epochs < 1) throw ConfigError("victim max epochs must be >= 1");
    if (patience < 1) throw ConfigError("victim patience must be >= 1");
    if (weight_decay < 0.0) throw ConfigError("victim weight decay must be >= 0");
  }
};

/// Two-layer GCN: A ReLU(A X W1) W2.
struct VictimGcn {
  Matrix w1;  // D x H
  Matrix w2;  // H x K
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double best_validation_accuracy = 0.0;
  int epochs_run = 0;

  int hidden() const noexcept { return static_cast<int>(w1.cols()); }
  int depth() const noexcept { return 2; }

  Matrix logits(const CsrMatrix& hat_a, const CsrMatrix& x_sparse) const {
    Matrix hidden_pre = multiply(hat_a, multiply(x_sparse, w1));
    return multiply(hat_a, Matrix(hidden_pre.cwiseMax(0.0) * w2));
  }

  Matrix logits(const CsrMatrix& hat_a, const Matrix& x) const {
    return logits(hat_a, CsrMatrix::from_dense(x));
  }
};

namespace detail {

struct GcnForward {
  Matrix pre;     // A X W1
  Matrix hidden;  // ReLU(pre)
  Matrix logits;  // A hidden W2
};

inline GcnForward gcn_forward(const CsrMatrix& hat_a, const CsrMatrix& xs, const Matrix& w1,
                              const Matrix& w2) {
  GcnForward f;
  f.pre = multiply(hat_a, multiply(xs, w1));
  f.hidden = f.pre.cwiseMax(0.0);
  f.logits = multiply(hat_a, Matrix(f.hidden * w2));
  return f;
}

/// Mean cross-entropy over `rows`; returns the logit gradient (already scaled).
inline double cross_entropy(const Matrix& logits, std::span<const int> labels, std::span<const Index> rows,
                            Matrix* grad) {
  if (grad) *grad = Matrix::Zero(logits.rows(), logits.cols());
  double loss = 0.0;
  const double inv = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  for (Index r : rows) {
    const double mx = logits.row(r).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(r).array() - mx).exp().matrix();
    const double sum = e.sum();
    const int y = labels[r];
    loss += -(logits(r, y) - mx - std::log(sum));
    if (grad) {
      grad->row(r) = e * (inv / sum);
      (*grad)(r, y) -= inv;
    }
  }
  return loss * inv;
}

struct GcnGradients {
  Matrix w1, w2;
  Matrix input;  // d loss / d (X W1), N x H; X-gradient is input * W1^T
};

inline GcnGradients gcn_backward(const CsrMatrix& hat_a, const CsrMatrix& xs, const Matrix& w2,
                                 const GcnForward& f, const Matrix& dlogits, bool need_weights) {
  GcnGradients g;
  const Matrix d_hw = multiply(hat_a, dlogits);  // A symmetric
  if (need_weights) g.w2 = f.hidden.transpose() * d_hw;
  Matrix d_pre = (d_hw * w2.transpose()).cwiseProduct((f.pre.array() > 0.0).cast<double>().matrix());
  g.input = multiply(hat_a, d_pre);
  if (need_weights) g.w1 = multiply_transposed(xs, g.input);
  return g;
}

inline double accuracy_on(const Matrix& logits, std::span<const int> labels, std::span<const Index> rows) {
  if (rows.empty()) return 0.0;
  std::size_t hit = 0;
  for (Index r : rows) hit += argmax_lowest(logits.row(r)) == labels[r] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(rows.size());
}

}  // namespace detail

/// Full-batch Adam on mean cross-entropy of the training nodes, L2 on both layers.
/// Stops after `patience` epochs without improving validation accuracy (ties broken by
/// lower validation loss) and returns the best weights seen.
inline VictimGcn train_victim(const Graph& g, const CsrMatrix& hat_a, std::span<const Index> train,
                              std::span<const Index> validation, const VictimConfig& cfg) {
  cfg.validate();
  if (!g.has_labels()) throw LabelError("victim training needs labels");
  if (train.empty()) throw ConfigError("victim training set is empty");
  const auto& labels = g.labels();
  for (Index r : train) {
    if (labels[r] == kUnlabeled) throw LabelError("training node " + std::to_string(r) + " is unlabeled");
  }
  const CsrMatrix xs = CsrMatrix::from_dense(g.features());
  const Index d = g.num_features();
  const int k = g.num_labels();
  const int h = cfg.hidden;

  Rng rng(cfg.seed);
  auto glorot = [&](Eigen::Index rows, Eigen::Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix w(rows, cols);
    for (Eigen::Index q = 0; q < w.size(); ++q) w.data()[q] = rng.uniform(-limit, limit);
    return w;
  };
  VictimGcn v;
  v.w1 = glorot(d, h);
  v.w2 = glorot(h, k);

  Matrix m1 = Matrix::Zero(d, h), s1 = Matrix::Zero(d, h);
  Matrix m2 = Matrix::Zero(h, k), s2 = Matrix::Zero(h, k);
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  auto adam = [&](Matrix& w, Matrix& m, Matrix& s, const Matrix& grad, double t) {
    m = beta1 * m + (1 - beta1) * grad;
    s = beta2 * s + (1 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, t), c2 = 1.0 - std::pow(beta2, t);
    w.array() -= cfg.learning_rate * (m.array() / c1) / ((s.array() / c2).sqrt() + adam_eps);
  };

  VictimGcn best = v;
  double best_val = -1.0;
  double best_val_loss = 0.0;
  int since_best = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto f = detail::gcn_forward(hat_a, xs, v.w1, v.w2);
    Matrix dlogits;
    const double loss = detail::cross_entropy(f.logits, labels, train, &dlogits) +
                        cfg.weight_decay * (v.w1.squaredNorm() + v.w2.squaredNorm());
    if (!std::isfinite(loss)) throw TrainingError("victim loss became non-finite", epoch);
    if (epoch == 0) v.initial_loss = loss;

    const auto monitor = validation.empty() ? train : validation;
    const double val_acc = detail::accuracy_on(f.logits, labels, monitor);
    const double val_loss = detail::cross_entropy(f.logits, labels, monitor, nullptr);
    if (val_acc > best_val || (val_acc == best_val && val_loss < best_val_loss)) {
      best_val = val_acc;
      best_val_loss = val_loss;
      best = v;
      best.epochs_run = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }

    auto grads = detail::gcn_backward(hat_a, xs, v.w2, f, dlogits, true);
    grads.w1 += 2.0 * cfg.weight_decay * v.w1;
    grads.w2 += 2.0 * cfg.weight_decay * v.w2;
    adam(v.w1, m1, s1, grads.w1, epoch + 1);
    adam(v.w2, m2, s2, grads.w2, epoch + 1);
    v.epochs_run = epoch + 1;
  }
  best.initial_loss = v.initial_loss;
  best.best_validation_accuracy = best_val;
  const auto f = detail::gcn_forward(hat_a, xs, best.w1, best.w2);
  best.final_loss = detail::cross_entropy(f.logits, labels, train, nullptr) +
                    cfg.weight_decay * (best.w1.squaredNorm() + best.w2.squaredNorm());
  if (!std::isfinite(best.final_loss)) throw TrainingError("victim loss became non-finite", best.epochs_run);
  return best;
}

inline VictimGcn train_victim(const Graph& g, std::span<const Index> train, std::span<const Index> validation,
                              const VictimConfig& cfg) {
  return train_victim(g, normalized_adjacency(g), train, validation, cfg);
}

inline VictimGcn train_victim(const Graph& g, const SplitAssignment& splits, const VictimConfig& cfg) {
  return train_victim(g, splits.train, splits.validation, cfg);
}

inline std::vector<int> victim_predict(const VictimGcn& v, const CsrMatrix& hat_a, const Matrix& x) {
  const Matrix z = v.logits(hat_a, x);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index r = 0; r < z.rows(); ++r) out[r] = argmax_lowest(z.row(r));
  return out;
}

inline std::vector<int> victim_predict(const VictimGcn& v, const Graph& g) {
  return victim_predict(v, normalized_adjacency(g), g.features());
}

/// d(mean cross-entropy over `rows`)/dX, N x D.
inline Matrix victim_feature_gradient(const VictimGcn& v, const CsrMatrix& hat_a, const Matrix& x,
                                      std::span<const int> labels, std::span<const Index> rows) {
  const CsrMatrix xs = CsrMatrix::from_dense(x);
  const auto f = detail::gcn_forward(hat_a, xs, v.w1, v.w2);
  Matrix dlogits;
  detail::cross_entropy(f.logits, labels, rows, &dlogits);
  const auto grads = detail::gcn_backward(hat_a, xs, v.w2, f, dlogits, false);
  return grads.input * v.w1.transpose();
}

}  // namespace advinf

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advinf/error.hpp"
#include "advinf/graph.hpp"
#include "advinf/perturbation.hpp"
#include "advinf/rng.hpp"
#include "advinf/sparse.hpp"
#include "advinf/types.hpp"

namespace advinf {

enum class Optimizer { kGradientDescent, kAdam };

struct TrainConfig {
  double learning_rate = 0.2;
  int epochs = 300;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  bool use_bias = true;
  Optimizer optimizer = Optimizer::kAdam;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("surrogate learning rate must be > 0");
    if (epochs < 1) throw ConfigError("surrogate epochs must be >= 1");
    if (weight_decay < 0.0) throw ConfigError("surrogate weight decay must be >= 0");
  }
};

/// Linear SGC: logits = (A^L X) W + b. Only the collapsed D x K weight matrix is kept.
struct SurrogateModel {
  Matrix weights;  // D x K
  Vector bias;     // K, zero when bias is disabled
  int depth = 2;
  std::string trained_on;
  double initial_loss = 0.0;
  double final_loss = 0.0;

  int num_labels() const noexcept { return static_cast<int>(weights.cols()); }
  Index num_features() const noexcept { return static_cast<Index>(weights.rows()); }

  Matrix logits(const Matrix& propagated) const {
    Matrix out = propagated * weights;
    out.rowwise() += bias.transpose();
    return out;
  }
};

struct Prediction {
  Index node = 0;
  int label = 0;
  Vector logits;
};

/// S = A^L X.
inline Matrix propagate_features(const PropagationOperator& op, const Matrix& x) {
  if (x.rows() != static_cast<Eigen::Index>(op.num_nodes()))
    throw ContractError("feature rows (" + std::to_string(x.rows()) + ") differ from node count (" +
                        std::to_string(op.num_nodes()) + ")");
  return multiply(op.powered, x);
}

/// Mean softmax cross-entropy over `rows` plus weight_decay * ||W||^2 (bias not
/// decayed). Fills the gradients when the pointers are non-null.
inline double softmax_regression_loss(const Matrix& s, std::span<const int> labels,
                                      std::span<const Index> rows, const Matrix& w, const Vector& b,
                                      double weight_decay, Matrix* grad_w, Vector* grad_b) {
  const auto k = w.cols();
  Matrix s_rows(static_cast<Eigen::Index>(rows.size()), s.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) s_rows.row(static_cast<Eigen::Index>(r)) = s.row(rows[r]);
  Matrix z = s_rows * w;
  z.rowwise() += b.transpose();
  double loss = 0.0;
  Matrix delta(z.rows(), k);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double mx = z.row(r).maxCoeff();
    Eigen::RowVectorXd e = (z.row(r).array() - mx).exp().matrix();
    const double sum = e.sum();
    const int y = labels[rows[static_cast<std::size_t>(r)]];
    loss += -(z(r, y) - mx - std::log(sum));
    delta.row(r) = e / sum;
    delta(r, y) -= 1.0;
  }
  const double inv = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  loss = loss * inv + weight_decay * w.squaredNorm();
  if (grad_w) *grad_w = (s_rows.transpose() * delta) * inv + 2.0 * weight_decay * w;
  if (grad_b) *grad_b = delta.colwise().sum().transpose() * inv;
  return loss;
}

/// Full-batch training of the softmax regression head on propagated features.
inline SurrogateModel train_surrogate(const Matrix& s, std::span<const int> labels,
                                      std::span<const Index> train, int num_labels,
                                      const TrainConfig& cfg, int depth = 2) {
  cfg.validate();
  if (train.empty()) throw ConfigError("surrogate training set is empty");
  if (num_labels < 1) throw LabelError("surrogate needs at least one label");
  for (Index r : train) {
    if (r >= labels.size() || labels[r] < 0 || labels[r] >= num_labels)
      throw LabelError("training node " + std::to_string(r) + " has no valid label");
  }

  const auto d = s.cols();
  Rng rng(cfg.seed);
  SurrogateModel m;
  m.depth = depth;
  m.weights.resize(d, num_labels);
  for (Eigen::Index k = 0; k < m.weights.size(); ++k) m.weights.data()[k] = rng.uniform(-0.01, 0.01);
  m.bias = Vector::Zero(num_labels);
  m.trained_on = "train split, " + std::to_string(train.size()) + " nodes";

  Matrix gw;
  Vector gb;
  Matrix mw = Matrix::Zero(d, num_labels), vw = Matrix::Zero(d, num_labels);
  Vector mb = Vector::Zero(num_labels), vb = Vector::Zero(num_labels);
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double loss = softmax_regression_loss(s, labels, train, m.weights, m.bias,
                                                cfg.weight_decay, &gw, &gb);
    if (!std::isfinite(loss)) throw TrainingError("surrogate loss became non-finite", epoch);
    if (epoch == 0) m.initial_loss = loss;
    if (!cfg.use_bias) gb.setZero();
    if (cfg.optimizer == Optimizer::kGradientDescent) {
      m.weights -= cfg.learning_rate * gw;
      m.bias -= cfg.learning_rate * gb;
    } else {
      const double t = epoch + 1;
      const double c1 = 1.0 - std::pow(beta1, t), c2 = 1.0 - std::pow(beta2, t);
      mw = beta1 * mw + (1 - beta1) * gw;
      vw = beta2 * vw + (1 - beta2) * gw.cwiseProduct(gw);
      m.weights.array() -= cfg.learning_rate * (mw.array() / c1) / ((vw.array() / c2).sqrt() + adam_eps);
      mb = beta1 * mb + (1 - beta1) * gb;
      vb = beta2 * vb + (1 - beta2) * gb.cwiseProduct(gb);
      m.bias.array() -= cfg.learning_rate * (mb.array() / c1) / ((vb.array() / c2).sqrt() + adam_eps);
    }
  }
  m.final_loss = softmax_regression_loss(s, labels, train, m.weights, m.bias, cfg.weight_decay,
                                         nullptr, nullptr);
  if (!std::isfinite(m.final_loss) || !m.weights.allFinite())
    throw TrainingError("surrogate loss became non-finite", cfg.epochs);
  return m;
}

inline std::vector<Prediction> predict_all(const SurrogateModel& m, const Matrix& s) {
  const Matrix z = m.logits(s);
  std::vector<Prediction> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    out[r].node = static_cast<Index>(r);
    out[r].logits = z.row(r).transpose();
    out[r].label = argmax_lowest(z.row(r));
  }
  return out;
}

/// Logits of node j after perturbing node i by `eps`, given j's clean logits and the
/// propagation weight alpha_ij. Linear in eps; no re-propagation.
inline Vector perturbed_logits(const SurrogateModel& m, const Vector& clean_logits_j, double alpha_ij,
                               const FeaturePerturbation& eps) {
  Vector out = clean_logits_j;
  if (alpha_ij == 0.0) return out;
  for (const auto& e : eps.entries) {
    out.noalias() += (alpha_ij * e.delta) * m.weights.row(e.feature).transpose();
  }
  return out;
}

inline Vector clean_logits(const SurrogateModel& m, const PropagationOperator& op, const Matrix& x,
                           Index j) {
  return (multiply_row(op.powered, j, x) * m.weights).transpose() + m.bias;
}

inline Vector perturbed_logits(const SurrogateModel& m, const PropagationOperator& op,
                               const Matrix& x, Index i, const FeaturePerturbation& eps, Index j) {
  return perturbed_logits(m, clean_logits(m, op, x, j), op.alpha(i, j), eps);
}

}  // namespace advinf

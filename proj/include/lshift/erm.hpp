#pragma once

// Class-weighted empirical risk minimization with multinomial softmax
// regression trained by full-batch gradient descent.

#include "lshift/distrib.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace lshift {

struct LabeledDataset {
  Eigen::MatrixXd features;  // n x d
  Labels labels;             // length n, entries in [0, k)
  int k = 0;

  [[nodiscard]] int n() const noexcept { return static_cast<int>(features.rows()); }
  [[nodiscard]] int d() const noexcept { return static_cast<int>(features.cols()); }

  /// Throws on empty data, out-of-range labels, length mismatch or NaNs.
  void validate() const;
  /// Rows selected by index, in the given order.
  [[nodiscard]] LabeledDataset subset(const std::vector<int>& rows) const;
};

struct SoftmaxModel {
  Eigen::MatrixXd weights;  // k x d
  Eigen::VectorXd bias;     // k
  std::vector<double> train_log;

  [[nodiscard]] int k() const noexcept { return static_cast<int>(weights.rows()); }
  [[nodiscard]] int d() const noexcept { return static_cast<int>(weights.cols()); }

  static SoftmaxModel zeros(int k, int d);

  [[nodiscard]] Eigen::MatrixXd logits(const Eigen::MatrixXd& features) const;
  /// Row-wise softmax of the logits.
  [[nodiscard]] Eigen::MatrixXd probabilities(const Eigen::MatrixXd& features) const;
};

struct TrainConfig {
  double learning_rate = 0.5;
  int epochs = 200;
  double l2_penalty = 1e-4;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class LossKind { CrossEntropy, ZeroOne };

/// (1/n) sum_j weights[y_j] * loss(y_j, h(x_j)). Cross-entropy is clamped to
/// [0, ce_cap]; the zero-one loss is already in [0, 1].
double weighted_loss(const SoftmaxModel& model, const LabeledDataset& data, const Eigen::VectorXd& weights,
                     LossKind kind = LossKind::CrossEntropy, double ce_cap = std::numeric_limits<double>::infinity());

struct ObjectiveGradient {
  double value = 0.0;
  Eigen::MatrixXd grad_weights;
  Eigen::VectorXd grad_bias;
};

/// Training objective: weighted mean cross-entropy + (l2 / 2) * ||W||_F^2, and its gradient.
ObjectiveGradient weighted_objective(const SoftmaxModel& model, const LabeledDataset& data,
                                     const Eigen::VectorXd& weights, double l2_penalty);

/// Throws Error(Divergence) if the objective becomes non-finite.
SoftmaxModel train(const LabeledDataset& data, const Eigen::VectorXd& weights, const TrainConfig& cfg);

/// Row-wise argmax of the logits; ties resolve to the lower class index.
Labels predict(const SoftmaxModel& model, const Eigen::MatrixXd& features);

struct SourceSplit {
  LabeledDataset class_set;   // round(beta * n) rows, trains the final classifier
  LabeledDataset weight_set;  // the rest, estimates the confusion matrix
};

SourceSplit split_source(const LabeledDataset& data, double beta, std::uint64_t seed);

/// Header "k,d" then k rows of d weights followed by the bias.
void write_model_csv(std::ostream& os, const SoftmaxModel& model);
SoftmaxModel read_model_csv(std::istream& is);

}  // namespace lshift

#pragma once

// Empirical confusion matrix of a black-box classifier and the concentration
// radii of the estimated quantities.

#include "lshift/distrib.hpp"

#include <Eigen/Dense>

#include <string>

namespace lshift {

/// Joint-probability confusion matrix, rows = predicted class, columns = true
/// class. Immutable once built; the smallest singular value is cached.
class ConfusionEstimate {
 public:
  ConfusionEstimate(Eigen::MatrixXd matrix, long n_samples);

  [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  [[nodiscard]] int k() const noexcept { return static_cast<int>(matrix_.rows()); }
  [[nodiscard]] long n_samples() const noexcept { return n_samples_; }
  [[nodiscard]] double sigma_min() const noexcept { return sigma_min_; }
  [[nodiscard]] double sigma_max() const noexcept { return sigma_max_; }

  /// Empirical predicted-label marginal p_h (row sums).
  [[nodiscard]] Eigen::VectorXd predicted_marginal() const { return matrix_.rowwise().sum(); }
  /// Empirical true-label marginal (column sums).
  [[nodiscard]] Eigen::VectorXd label_marginal() const { return matrix_.colwise().sum().transpose(); }

 private:
  Eigen::MatrixXd matrix_;
  long n_samples_;
  double sigma_min_;
  double sigma_max_;
};

ConfusionEstimate estimate_confusion(const Labels& preds, const Labels& labels, int k);

/// Empirical frequency of each predicted class.
LabelDist estimate_label_dist(const Labels& preds, int k);

/// b = q - C 1.
Eigen::VectorXd build_b(const LabelDist& q_hat, const ConfusionEstimate& c_hat);

/// Radius for ||C_hat - C||_2 at confidence 1 - delta from n_weight samples.
double delta_C(int k, double n_weight, double delta);

/// Radius for ||b_hat - b||_2 at confidence 1 - delta.
double delta_b(double n_weight, double n_target, double delta);

/// Radius for ||q_hat_h - q_h||_2: 1/sqrt(m) + sqrt(log(1/delta)/m).
double delta_q(double n_target, double delta);

/// Radius for ||p_hat_h - p_h||_2 on the weight set.
double delta_p(double n_weight, double delta);

struct Deltas {
  double delta_C = 0.0;
  double delta_b = 0.0;
  double delta_q = 0.0;
  double delta_p = 0.0;
  double delta = 0.05;
  double n_weight = 0.0;
  double n_target = 0.0;

  static Deltas compute(int k, double n_weight, double n_target, double delta);
};

/// k rows of k comma-separated entries, row-major, LF line endings.
std::string to_csv(const ConfusionEstimate& c);

}  // namespace lshift

#pragma once

// Closed-form excess-risk bounds for the importance-weighted classifier, the
// lambda switching threshold and a Monte-Carlo estimate of the deviation from
// exact label shift.
//
// Every O(.) of the headline statements is replaced by the explicit constants
// of the weight-estimation radius (see epsilon_theta), so the values returned
// here are computable numbers rather than orders. They are loose by design of
// those constants; compare them relative to one another.

#include "lshift/distrib.hpp"
#include "lshift/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

namespace lshift {

struct BoundParams {
  double n_p = 10000;
  double n_q = 10000;
  double beta = 0.5;
  double lambda = 1.0;
  double delta = 0.05;
  int k = 10;
  double theta_norm = 0.0;  // ||theta||_2, used by generalization_bound
  double theta_max = 0.0;   // prior upper bound, used by crude_bound
  double sigma_min = 1.0;
  double d_inf = 1.0;
  double d = 1.0;
  /// Stand-in for 2 R_n(G) (or a finite-class term), supplied by the caller.
  double complexity_term = 0.0;
  /// Expected |1 - p(x|y)/q(x|y)| under the target; 0 under exact label shift.
  /// Adds 2 (1 + lambda) * drift to the bound.
  double drift = 0.0;
  /// Also inflate the weight-estimation radius by 2 * drift / sigma_min.
  bool drift_in_epsilon_theta = false;

  /// Throws Error(InvalidParams) on out-of-range fields.
  void validate() const;
};

/// complexity_term + min{ d_inf sqrt(log(2/delta)/(beta n_p)),
///                        2 d_inf log(2/delta)/n + sqrt(2 d log(2/delta)/n) }, n = beta n_p.
double epsilon_G(const BoundParams& p);

/// epsilon_G + (1 - lambda) ||theta|| + lambda epsilon_theta(||theta||).
double generalization_bound(const BoundParams& p);

/// Same with theta_max in place of ||theta||.
double crude_bound(const BoundParams& p);

/// generalization_bound after t streaming steps: n_q = t and every log(c/delta)
/// becomes log(c t/delta) (union bound over the steps).
double streaming_bound(const BoundParams& p, long t);

/// sqrt(8 d (log|H| + log(3/delta))/(beta n)) + 2 d_inf (log|H| + log(3/delta))/(3 beta n).
double finite_class_complexity(double log_hypotheses, double d, double d_inf, double beta, double n_p,
                               double delta);

/// 1 / (theta_max^2 (sigma_min - 1/sqrt(n_p))^2); Error(BelowCritical) when
/// sigma_min <= 1/sqrt(n_p).
double lambda_threshold(double n_p, double theta_max, double sigma_min);

struct ThresholdPoint {
  double sigma_min;
  double n_q_threshold;
};

/// Threshold curve on a log grid of sigma_min over [(1 + 1e-3)/sqrt(n_p), 1].
std::vector<ThresholdPoint> threshold_curve(double n_p, double theta_max, int points = 200);

/// Class-conditional feature law, evaluable pointwise and samplable.
class ConditionalModel {
 public:
  virtual ~ConditionalModel() = default;
  [[nodiscard]] virtual double log_density(const Eigen::VectorXd& x, int y) const = 0;
  [[nodiscard]] virtual Eigen::VectorXd sample(int y, Rng& rng) const = 0;
};

/// Isotropic Gaussians N(mean_y, sigma^2 I).
class GaussianConditionals final : public ConditionalModel {
 public:
  GaussianConditionals(Eigen::MatrixXd means, double sigma = 1.0);

  [[nodiscard]] double log_density(const Eigen::VectorXd& x, int y) const override;
  [[nodiscard]] Eigen::VectorXd sample(int y, Rng& rng) const override;
  [[nodiscard]] const Eigen::MatrixXd& means() const noexcept { return means_; }

 private:
  Eigen::MatrixXd means_;  // k x d
  double sigma_;
};

struct DriftEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo estimate of E_{(x,y)~Q} |1 - p(x|y)/q(x|y)|.
/// Throws Error(DensityZero) if q(x|y) = 0 at a sample.
DriftEstimate drift_term(const ConditionalModel& q_cond, const ConditionalModel& p_cond, const LabelDist& q,
                         int n_mc, std::uint64_t seed);

}  // namespace lshift

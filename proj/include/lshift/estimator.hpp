#pragma once

// Importance-weight estimators: the norm-regularized estimator of theta = w - 1
// (proximal gradient on each rho of a geometric grid, then selection by the
// unsquared criterion), the plug-in inverse baseline, the lambda rule and the
// high-probability error radius of the regularized estimate.

#include "lshift/confusion.hpp"
#include "lshift/distrib.hpp"
#include "lshift/error.hpp"

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace lshift {

enum class StepRule { Fixed, Backtracking };

struct SolverOptions {
  int max_iters = 50000;
  /// Convergence threshold on the composite-gradient (KKT) residual
  /// ||theta - prox(theta - eta * grad)|| / eta.
  double tol = 1e-11;
  StepRule step_rule = StepRule::Fixed;
  int rho_grid_max_exponent = 12;
  /// Multiplier on Delta_C in both the rho grid and the selection penalty.
  /// 1.0 is the theoretical value; 0.01 is the empirical preset.
  double delta_scale = 1.0;
  bool record_trace = false;

  void validate() const;
  static SolverOptions experiment_preset();
};

struct ProxResult {
  Eigen::VectorXd theta;
  /// 0.5 * ||C theta - b||^2 + rho * ||theta||.
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective after every iteration (only when record_trace is set).
  std::vector<double> objective_trace;
};

/// Raised when every rho on the grid exhausts its iteration budget; carries the
/// best iterate found.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, Eigen::VectorXd best)
      : Error(ErrorCode::NonConvergence, what), best_(std::move(best)) {}
  [[nodiscard]] const Eigen::VectorXd& best_iterate() const noexcept { return best_; }

 private:
  Eigen::VectorXd best_;
};

/// argmin_theta 0.5 * ||C theta - b||^2 + rho * ||theta||_2 via accelerated
/// proximal gradient (monotone FISTA with restart) and the block
/// soft-threshold prox. Non-convergence is reported through the result.
ProxResult solve_theta_rho(const Eigen::MatrixXd& c, const Eigen::VectorXd& b, double rho,
                           const SolverOptions& opts = {});
ProxResult solve_theta_rho(const ConfusionEstimate& c_hat, const Eigen::VectorXd& b_hat, double rho,
                           const SolverOptions& opts = {});

/// ||C theta - b|| + penalty * ||theta||.
double selection_criterion(const Eigen::MatrixXd& c, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& theta, double penalty);

struct GridCandidate {
  double rho = 0.0;
  Eigen::VectorXd theta;
  double criterion = 0.0;
  bool converged = false;
};

struct ThetaSelection {
  Eigen::VectorXd theta_hat;
  double rho_selected = 0.0;
  double criterion = 0.0;
  std::vector<GridCandidate> candidates;
};

/// rho grid 2^(i+1) * (s * Delta_C) * Delta_b for i = 0..E.
std::vector<double> rho_grid(const Deltas& deltas, const SolverOptions& opts);

/// Solves every grid point and keeps the candidate minimizing
/// ||C theta - b|| + 3 * s * Delta_C * ||theta||; ties go to the larger rho.
ThetaSelection select_theta(const Eigen::MatrixXd& c, const Eigen::VectorXd& b, const Deltas& deltas,
                            const SolverOptions& opts = {});
ThetaSelection select_theta(const ConfusionEstimate& c_hat, const Eigen::VectorXd& b_hat,
                            const Deltas& deltas, const SolverOptions& opts = {});

enum class Method { Rlls, Bbsl, Oracle, Unweighted };

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view name);

struct WeightEstimate {
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd weights;
  double lambda = 1.0;
  double rho_selected = 0.0;
  double objective = 0.0;
  Method method = Method::Unweighted;
};

/// Plug-in inverse C^{-1} q with negative entries clipped to zero.
/// Throws Error(SingularConfusion) when sigma_min(C_hat) <= 1e-12.
WeightEstimate bbsl_weights(const ConfusionEstimate& c_hat, const LabelDist& q_hat);

/// weights = max(0, 1 + lambda * theta_hat).
WeightEstimate regularized_weights(const Eigen::VectorXd& theta_hat, double lambda);

WeightEstimate oracle_weights(const LabelDist& q, const LabelDist& p);
WeightEstimate unweighted(int k);

/// Used only by the continuous lambda mode.
struct LambdaRuleExtras {
  double beta = 0.5;
  double delta = 0.05;
  int k = 10;
};

/// Binary: 1 iff sigma > 1/sqrt(n_p) and n_q >= 1 / (theta_max^2 (sigma - 1/sqrt(n_p))^2).
/// Continuous: clamp(1 - epsilon_theta / theta_max, 0, 1).
double lambda_rule(double n_q, double n_p, double theta_max, double sigma_min_est, bool continuous = false,
                   const LambdaRuleExtras& extras = {});

/// High-probability bound on ||theta_hat - theta||_2 with explicit constants;
/// n_p is the full source count, (1 - beta) n_p of which estimate the weights.
double epsilon_theta(double n_p, double n_q, double beta, double theta_norm, double delta, double sigma_min,
                     int k);

}  // namespace lshift

#include "lshift/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lshift {

void SolverOptions::validate() const {
  if (max_iters < 1) throw Error(ErrorCode::InvalidParams, "max_iters must be >= 1");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidParams, "tol must be > 0");
  if (!(delta_scale > 0.0)) throw Error(ErrorCode::InvalidParams, "delta_scale must be > 0");
  if (rho_grid_max_exponent < 0) throw Error(ErrorCode::InvalidParams, "rho grid exponent must be >= 0");
}

SolverOptions SolverOptions::experiment_preset() {
  SolverOptions o;
  o.delta_scale = 0.01;
  return o;
}

namespace {

Eigen::VectorXd block_soft_threshold(const Eigen::VectorXd& v, double threshold) {
  const double norm = v.norm();
  if (norm <= threshold) return Eigen::VectorXd::Zero(v.size());
  return (1.0 - threshold / norm) * v;
}

struct Problem {
  const Eigen::MatrixXd& c;
  const Eigen::VectorXd& b;
  double rho;

  [[nodiscard]] double smooth(const Eigen::VectorXd& x) const { return 0.5 * (c * x - b).squaredNorm(); }
  [[nodiscard]] Eigen::VectorXd grad(const Eigen::VectorXd& x) const { return c.transpose() * (c * x - b); }
  [[nodiscard]] double objective(const Eigen::VectorXd& x) const { return smooth(x) + rho * x.norm(); }
  /// F(z) - F(x) without cancelling two nearly equal objective values.
  [[nodiscard]] double objective_change(const Eigen::VectorXd& z, const Eigen::VectorXd& x) const {
    const Eigen::VectorXd dz = z - x;
    const Eigen::VectorXd cd = c * dz;
    const double smooth_change = cd.dot(c * x - b) + 0.5 * cd.squaredNorm();
    const double norms = z.norm() + x.norm();
    const double reg_change = norms > 0.0 ? dz.dot(z + x) / norms : 0.0;
    return smooth_change + rho * reg_change;
  }
  [[nodiscard]] double kkt(const Eigen::VectorXd& x, double eta) const {
    const Eigen::VectorXd step = block_soft_threshold(x - eta * grad(x), eta * rho);
    return (x - step).norm() / eta;
  }
};

}  // namespace

ProxResult solve_theta_rho(const Eigen::MatrixXd& c, const Eigen::VectorXd& b, double rho,
                           const SolverOptions& opts) {
  opts.validate();
  if (c.rows() != b.size() || c.rows() != c.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "C and b dimensions disagree");
  }
  if (!(rho >= 0.0)) throw Error(ErrorCode::InvalidParams, "rho must be >= 0");

  const Problem prob{c, b, rho};
  const Eigen::Index k = c.cols();
  const double sigma_max = Eigen::JacobiSVD<Eigen::MatrixXd>(c).singularValues()(0);
  const double lipschitz = std::max(sigma_max * sigma_max, std::numeric_limits<double>::min());
  // The KKT residual is always measured with the exact 1/L step so that the
  // stopping test means the same thing under both step rules.
  const double eta_ref = 1.0 / lipschitz;

  ProxResult out;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd x_prev = x;
  Eigen::VectorXd y = x;
  double fx = prob.objective(x);
  double t = 1.0;
  bool restarted = true;
  double lip = opts.step_rule == StepRule::Fixed ? lipschitz : lipschitz / 16.0;

  out.kkt_residual = prob.kkt(x, eta_ref);
  if (opts.record_trace) out.objective_trace.push_back(fx);
  if (out.kkt_residual <= opts.tol) {
    out.theta = x;
    out.objective = fx;
    out.converged = true;
    return out;
  }

  for (int it = 1; it <= opts.max_iters; ++it) {
    const Eigen::VectorXd gy = prob.grad(y);
    const double fy = prob.smooth(y);
    Eigen::VectorXd z;
    for (;;) {
      z = block_soft_threshold(y - gy / lip, rho / lip);
      if (opts.step_rule == StepRule::Fixed) break;
      const Eigen::VectorXd d = z - y;
      if (prob.smooth(z) <= fy + gy.dot(d) + 0.5 * lip * d.squaredNorm() + 1e-18) break;
      lip *= 2.0;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    x_prev = x;
    // Right after a restart z is a plain proximal-gradient step from x, which
    // cannot increase the objective; a positive change there is rounding.
    if (restarted || prob.objective_change(z, x) <= 0.0) {
      restarted = false;
      x = z;
      fx = prob.objective(x);
      y = x + ((t - 1.0) / t_next) * (x - x_prev);
      t = t_next;
    } else {
      // Monotone step: keep x, restart momentum from it.
      y = x;
      t = 1.0;
      restarted = true;
    }

    if (opts.record_trace) out.objective_trace.push_back(fx);
    out.iterations = it;
    out.kkt_residual = prob.kkt(x, eta_ref);
    if (out.kkt_residual <= opts.tol) {
      out.converged = true;
      break;
    }
  }
  out.theta = x;
  out.objective = fx;
  return out;
}

ProxResult solve_theta_rho(const ConfusionEstimate& c_hat, const Eigen::VectorXd& b_hat, double rho,
                           const SolverOptions& opts) {
  return solve_theta_rho(c_hat.matrix(), b_hat, rho, opts);
}

double selection_criterion(const Eigen::MatrixXd& c, const Eigen::VectorXd& b, const Eigen::VectorXd& theta,
                           double penalty) {
  return (c * theta - b).norm() + penalty * theta.norm();
}

std::vector<double> rho_grid(const Deltas& deltas, const SolverOptions& opts) {
  const double base = opts.delta_scale * deltas.delta_C * deltas.delta_b;
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(opts.rho_grid_max_exponent) + 1);
  for (int i = 0; i <= opts.rho_grid_max_exponent; ++i) grid.push_back(std::ldexp(base, i + 1));
  return grid;
}

ThetaSelection select_theta(const Eigen::MatrixXd& c, const Eigen::VectorXd& b, const Deltas& deltas,
                            const SolverOptions& opts) {
  opts.validate();
  if (!(deltas.delta_C > 0.0 && deltas.delta_b > 0.0)) {
    throw Error(ErrorCode::InvalidParams, "deltas must be positive");
  }
  const double penalty = 3.0 * opts.delta_scale * deltas.delta_C;
  ThetaSelection sel;
  for (double rho : rho_grid(deltas, opts)) {
    ProxResult r = solve_theta_rho(c, b, rho, opts);
    GridCandidate cand;
    cand.rho = rho;
    cand.criterion = selection_criterion(c, b, r.theta, penalty);
    cand.converged = r.converged;
    cand.theta = std::move(r.theta);
    sel.candidates.push_back(std::move(cand));
  }

  const GridCandidate* best = nullptr;
  // Walk from the largest rho down; only a strict improvement displaces it.
  for (auto it = sel.candidates.rbegin(); it != sel.candidates.rend(); ++it) {
    if (!it->converged) continue;
    if (best == nullptr || it->criterion < best->criterion) best = &*it;
  }
  if (best == nullptr) {
    const GridCandidate* fallback = &sel.candidates.back();
    for (const auto& cand : sel.candidates) {
      if (cand.criterion < fallback->criterion) fallback = &cand;
    }
    throw NonConvergenceError("no rho on the grid converged", fallback->theta);
  }
  sel.theta_hat = best->theta;
  sel.rho_selected = best->rho;
  sel.criterion = best->criterion;
  return sel;
}

ThetaSelection select_theta(const ConfusionEstimate& c_hat, const Eigen::VectorXd& b_hat, const Deltas& deltas,
                            const SolverOptions& opts) {
  return select_theta(c_hat.matrix(), b_hat, deltas, opts);
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::Rlls: return "rlls";
    case Method::Bbsl: return "bbsl";
    case Method::Oracle: return "oracle";
    case Method::Unweighted: return "unweighted";
  }
  return "unweighted";
}

Method parse_method(std::string_view name) {
  if (name == "rlls") return Method::Rlls;
  if (name == "bbsl") return Method::Bbsl;
  if (name == "oracle") return Method::Oracle;
  if (name == "unweighted") return Method::Unweighted;
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + std::string(name) + "'");
}

WeightEstimate bbsl_weights(const ConfusionEstimate& c_hat, const LabelDist& q_hat) {
  if (q_hat.size() != c_hat.k()) throw Error(ErrorCode::DimensionMismatch, "q_hat and C_hat differ in k");
  if (c_hat.sigma_min() <= 1e-12) throw Error(ErrorCode::SingularConfusion, "confusion matrix is singular");
  const Eigen::VectorXd raw = c_hat.matrix().fullPivLu().solve(q_hat.probs());
  WeightEstimate est;
  est.theta_hat = raw.array() - 1.0;
  est.weights = raw.cwiseMax(0.0);
  est.lambda = 1.0;
  est.method = Method::Bbsl;
  return est;
}

WeightEstimate regularized_weights(const Eigen::VectorXd& theta_hat, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::InvalidParams, "lambda must lie in [0, 1]");
  WeightEstimate est;
  est.theta_hat = theta_hat;
  est.weights = WeightShift{theta_hat, lambda}.weights();
  est.lambda = lambda;
  est.method = Method::Rlls;
  return est;
}

WeightEstimate oracle_weights(const LabelDist& q, const LabelDist& p) {
  WeightEstimate est;
  est.weights = importance_weights(q, p);
  est.theta_hat = est.weights.array() - 1.0;
  est.lambda = 1.0;
  est.method = Method::Oracle;
  return est;
}

WeightEstimate unweighted(int k) {
  WeightEstimate est;
  est.theta_hat = Eigen::VectorXd::Zero(k);
  est.weights = Eigen::VectorXd::Ones(k);
  est.lambda = 0.0;
  est.method = Method::Unweighted;
  return est;
}

double lambda_rule(double n_q, double n_p, double theta_max, double sigma_min_est, bool continuous,
                   const LambdaRuleExtras& extras) {
  if (!(sigma_min_est > 0.0)) throw Error(ErrorCode::InvalidParams, "sigma_min estimate must be > 0");
  if (!(theta_max > 0.0)) throw Error(ErrorCode::InvalidParams, "theta_max must be > 0");
  if (!(n_p >= 1.0 && n_q >= 1.0)) throw Error(ErrorCode::InvalidParams, "sample counts must be >= 1");
  if (continuous) {
    const double eps = epsilon_theta(n_p, n_q, extras.beta, theta_max, extras.delta, sigma_min_est, extras.k);
    return std::clamp(1.0 - eps / theta_max, 0.0, 1.0);
  }
  const double gap = sigma_min_est - 1.0 / std::sqrt(n_p);
  if (!(gap > 0.0)) return 0.0;
  const double threshold = 1.0 / (theta_max * theta_max * gap * gap);
  return n_q >= threshold ? 1.0 : 0.0;
}

double epsilon_theta(double n_p, double n_q, double beta, double theta_norm, double delta, double sigma_min,
                     int k) {
  if (!(delta > 0.0 && delta <= 0.5)) throw Error(ErrorCode::InvalidDelta, "epsilon_theta requires 0 < delta <= 0.5");
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorCode::InvalidBeta, "beta must lie in (0, 1)");
  if (!(sigma_min > 0.0)) throw Error(ErrorCode::InvalidParams, "sigma_min must be > 0");
  if (!(n_p >= 1.0 && n_q >= 1.0) || k < 2 || !(theta_norm >= 0.0)) {
    throw Error(ErrorCode::InvalidParams, "epsilon_theta parameters out of range");
  }
  if (std::isinf(sigma_min)) return 0.0;
  const double nw = (1.0 - beta) * n_p;
  const double inner = 2.0 * theta_norm * std::log(3.0 * k / delta) / nw +
                       theta_norm * std::sqrt(18.0 * std::log(6.0 * k / delta) / nw) +
                       std::sqrt(36.0 * std::log(3.0 / delta) / nw) + std::sqrt(36.0 * std::log(3.0 / delta) / n_q);
  return inner / sigma_min;
}

}  // namespace lshift

#include "lshift/bounds.hpp"

#include "lshift/error.hpp"
#include "lshift/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lshift {

void BoundParams::validate() const {
  if (!(delta > 0.0 && delta <= 0.5)) throw Error(ErrorCode::InvalidParams, "delta must lie in (0, 0.5]");
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorCode::InvalidParams, "beta must lie in (0, 1)");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::InvalidParams, "lambda must lie in [0, 1]");
  if (!(d >= 1.0 && d_inf >= 1.0)) throw Error(ErrorCode::InvalidParams, "d and d_inf must be >= 1");
  if (!(n_p >= 1.0 && n_q >= 1.0)) throw Error(ErrorCode::InvalidParams, "sample counts must be >= 1");
  if (k < 2) throw Error(ErrorCode::InvalidParams, "k must be >= 2");
  if (!(sigma_min > 0.0)) throw Error(ErrorCode::InvalidParams, "sigma_min must be > 0");
  if (!(theta_norm >= 0.0 && theta_max >= 0.0)) throw Error(ErrorCode::InvalidParams, "theta must be >= 0");
  if (!(complexity_term >= 0.0 && drift >= 0.0)) throw Error(ErrorCode::InvalidParams, "negative term");
}

double epsilon_G(const BoundParams& p) {
  p.validate();
  const double n = p.beta * p.n_p;
  const double l = std::log(2.0 / p.delta);
  const double slow = p.d_inf * std::sqrt(l / n);
  const double fast = 2.0 * p.d_inf * l / n + std::sqrt(2.0 * p.d * l / n);
  return p.complexity_term + std::min(slow, fast);
}

namespace {

double bound_with_theta(const BoundParams& p, double theta) {
  double eps = epsilon_theta(p.n_p, p.n_q, p.beta, theta, p.delta, p.sigma_min, p.k);
  if (p.drift_in_epsilon_theta) eps += 2.0 * p.drift / p.sigma_min;
  return epsilon_G(p) + (1.0 - p.lambda) * theta + p.lambda * eps + 2.0 * (1.0 + p.lambda) * p.drift;
}

}  // namespace

double generalization_bound(const BoundParams& p) {
  p.validate();
  return bound_with_theta(p, p.theta_norm);
}

double crude_bound(const BoundParams& p) {
  p.validate();
  return bound_with_theta(p, p.theta_max);
}

double streaming_bound(const BoundParams& p, long t) {
  if (t < 1) throw Error(ErrorCode::InvalidParams, "t must be >= 1");
  // log(c t / delta) == log(c / (delta / t)).
  BoundParams q = p;
  q.delta = p.delta / static_cast<double>(t);
  q.n_q = static_cast<double>(t);
  p.validate();
  return generalization_bound(q);
}

double finite_class_complexity(double log_hypotheses, double d, double d_inf, double beta, double n_p,
                               double delta) {
  if (!(log_hypotheses >= 0.0) || !(beta > 0.0 && beta < 1.0) || !(delta > 0.0 && delta < 1.0) || !(n_p >= 1.0)) {
    throw Error(ErrorCode::InvalidParams, "finite_class_complexity parameters out of range");
  }
  const double n = beta * n_p;
  const double l = log_hypotheses + std::log(3.0 / delta);
  return std::sqrt(8.0 * d * l / n) + 2.0 * d_inf * l / (3.0 * n);
}

double lambda_threshold(double n_p, double theta_max, double sigma_min) {
  if (!(n_p >= 1.0) || !(theta_max > 0.0)) throw Error(ErrorCode::InvalidParams, "need n_p >= 1, theta_max > 0");
  const double gap = sigma_min - 1.0 / std::sqrt(n_p);
  if (!(gap > 0.0)) throw Error(ErrorCode::BelowCritical, "sigma_min <= 1/sqrt(n_p): threshold is infinite");
  return 1.0 / (theta_max * theta_max * gap * gap);
}

std::vector<ThresholdPoint> threshold_curve(double n_p, double theta_max, int points) {
  if (points < 2) throw Error(ErrorCode::InvalidParams, "need at least 2 curve points");
  const double lo = (1.0 + 1e-3) / std::sqrt(n_p);
  const double hi = 1.0;
  if (!(lo < hi)) throw Error(ErrorCode::BelowCritical, "n_p too small for a threshold curve");
  std::vector<ThresholdPoint> curve;
  curve.reserve(static_cast<std::size_t>(points));
  const double step = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) {
    const double s = i == points - 1 ? hi : lo * std::exp(step * i);
    curve.push_back({s, lambda_threshold(n_p, theta_max, s)});
  }
  return curve;
}

GaussianConditionals::GaussianConditionals(Eigen::MatrixXd means, double sigma)
    : means_(std::move(means)), sigma_(sigma) {
  if (!(sigma_ > 0.0)) throw Error(ErrorCode::InvalidParams, "sigma must be > 0");
}

double GaussianConditionals::log_density(const Eigen::VectorXd& x, int y) const {
  const double d = static_cast<double>(means_.cols());
  const double r2 = (x - means_.row(y).transpose()).squaredNorm();
  return -0.5 * r2 / (sigma_ * sigma_) - d * std::log(sigma_) - 0.5 * d * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd GaussianConditionals::sample(int y, Rng& rng) const {
  std::normal_distribution<double> noise(0.0, sigma_);
  Eigen::VectorXd x = means_.row(y).transpose();
  for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += noise(rng);
  return x;
}

DriftEstimate drift_term(const ConditionalModel& q_cond, const ConditionalModel& p_cond, const LabelDist& q,
                         int n_mc, std::uint64_t seed) {
  if (n_mc < 2) throw Error(ErrorCode::InvalidParams, "n_mc must be >= 2");
  const Labels ys = sample_labels(q, n_mc, derive_seed(seed, {0}));
  Rng rng(derive_seed(seed, {1}));
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int y : ys) {
    const Eigen::VectorXd x = q_cond.sample(y, rng);
    const double lq = q_cond.log_density(x, y);
    if (!(lq > -INFINITY)) throw Error(ErrorCode::DensityZero, "q(x|y) = 0 at a sample");
    const double v = std::abs(1.0 - std::exp(p_cond.log_density(x, y) - lq));
    sum += v;
    sum_sq += v * v;
  }
  DriftEstimate out;
  out.value = sum / n_mc;
  const double var = std::max(0.0, (sum_sq - n_mc * out.value * out.value) / (n_mc - 1));
  out.std_error = std::sqrt(var / n_mc);
  return out;
}

}  // namespace lshift

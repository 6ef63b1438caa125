#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include "lshift/confusion.hpp"
#include "lshift/estimator.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace lshift::testing {

/// 0.5 ||C x - b||^2 + rho ||x||, evaluated directly.
inline double prox_objective(const Eigen::MatrixXd& c, const Eigen::VectorXd& b, const Eigen::VectorXd& x,
                             double rho) {
  return 0.5 * (c * x - b).squaredNorm() + rho * x.norm();
}

/// Coarse-to-fine lattice minimizer in 3 dimensions: exhaustive search over
/// the cube of half-width `radius`, then repeated exhaustive searches on finer
/// lattices around the incumbent until the spacing reaches `final_step`. The
/// objective is convex, so the refined window always contains the minimizer
/// of the previous lattice's neighbourhood.
inline Eigen::Vector3d lattice_minimize(const Eigen::Matrix3d& c, const Eigen::Vector3d& b, double rho,
                                        double radius, double final_step) {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double half = radius;
  const int per_side = 20;
  for (;;) {
    const double step = half / per_side;
    Eigen::Vector3d best = center;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = -per_side; i <= per_side; ++i) {
      for (int j = -per_side; j <= per_side; ++j) {
        for (int l = -per_side; l <= per_side; ++l) {
          const Eigen::Vector3d x = center + step * Eigen::Vector3d(i, j, l);
          const double v = prox_objective(c, b, x, rho);
          if (v < best_val) {
            best_val = v;
            best = x;
          }
        }
      }
    }
    center = best;
    if (step <= final_step) return center;
    half = 4.0 * step;
  }
}

inline double ref_delta_C(int k, double n, double delta) {
  const double l = std::log(2.0 * k / delta);
  return 2.0 * l / (3.0 * n) + std::sqrt(2.0 * l / n);
}

inline double ref_delta_b(double nw, double nt, double delta) {
  const double l = std::log(1.0 / delta);
  return 2.0 / std::sqrt(std::log(2.0)) * (std::sqrt(l / nw) + std::sqrt(l / nt));
}

inline double ref_epsilon_theta(double n_p, double n_q, double beta, double th, double delta, double sigma, int k) {
  const double nw = (1.0 - beta) * n_p;
  return (2.0 * th * std::log(3.0 * k / delta) / nw + th * std::sqrt(18.0 * std::log(6.0 * k / delta) / nw) +
          std::sqrt(36.0 * std::log(3.0 / delta) / nw) + std::sqrt(36.0 * std::log(3.0 / delta) / n_q)) /
         sigma;
}

inline double ref_epsilon_G(double n_p, double beta, double delta, double d_inf, double d, double complexity) {
  const double n = beta * n_p;
  const double l = std::log(2.0 / delta);
  return complexity + std::min(d_inf * std::sqrt(l / n), 2.0 * d_inf * l / n + std::sqrt(2.0 * d * l / n));
}

inline double ref_bound(double n_p, double n_q, double beta, double lambda, double delta, int k, double th,
                        double sigma, double d_inf, double d, double complexity) {
  return ref_epsilon_G(n_p, beta, delta, d_inf, d, complexity) + (1.0 - lambda) * th +
         lambda * ref_epsilon_theta(n_p, n_q, beta, th, delta, sigma, k);
}

inline double ref_lambda_threshold(double n_p, double theta_max, double sigma) {
  const double g = sigma - 1.0 / std::sqrt(n_p);
  return 1.0 / (theta_max * theta_max * g * g);
}

}  // namespace lshift::testing

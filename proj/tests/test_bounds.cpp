#include "doctest.h"

#include "lshift/bounds.hpp"
#include "lshift/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <cmath>
#include <functional>
#include <numbers>

using namespace lshift;
using namespace lshift::testing;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an lshift::Error");
  return ErrorCode::Io;
}

BoundParams pinned() {
  BoundParams p;
  p.n_p = 5000;
  p.n_q = 3000;
  p.beta = 0.4;
  p.lambda = 0.7;
  p.delta = 0.05;
  p.k = 8;
  p.theta_norm = 2.5;
  p.theta_max = 4;
  p.sigma_min = 0.12;
  p.d_inf = 3.5;
  p.d = 2.2;
  p.complexity_term = 0.03;
  return p;
}

// Composite Simpson rule on [a, b] with n (even) panels.
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("pinned bound values") {
  const BoundParams p = pinned();
  CHECK(generalization_bound(p) == doctest::Approx(6.4891775690683673).epsilon(1e-13));
  CHECK(crude_bound(p) == doctest::Approx(8.751281825102037).epsilon(1e-13));
  CHECK(streaming_bound(p, 100) == doctest::Approx(17.082968955588537).epsilon(1e-13));
  CHECK(rel_diff(generalization_bound(p), ref_bound(5000, 3000, 0.4, 0.7, 0.05, 8, 2.5, 0.12, 3.5, 2.2, 0.03)) <=
        1e-13);
}

TEST_CASE("epsilon_G takes the smaller branch") {
  BoundParams p = pinned();
  CHECK(rel_diff(epsilon_G(p), ref_epsilon_G(5000, 0.4, 0.05, 3.5, 2.2, 0.03)) <= 1e-14);
  // Tiny n: the slow branch wins; huge d_inf relative to d with big n: the fast one.
  p.n_p = 20;
  const double n = 0.4 * 20;
  const double l = std::log(40.0);
  CHECK(epsilon_G(p) == doctest::Approx(0.03 + 3.5 * std::sqrt(l / n)).epsilon(1e-14));
  p.n_p = 1e7;
  p.d = 1.0;
  p.d_inf = 100;
  const double n2 = 0.4e7;
  CHECK(epsilon_G(p) == doctest::Approx(0.03 + 200 * l / n2 + std::sqrt(2 * l / n2)).epsilon(1e-14));
}

TEST_CASE("bound structure") {
  BoundParams p = pinned();
  p.lambda = 0.0;
  CHECK(generalization_bound(p) == doctest::Approx(epsilon_G(p) + p.theta_norm).epsilon(1e-15));

  // Affine in lambda.
  BoundParams a = pinned(), m = pinned(), b = pinned();
  a.lambda = 0.0;
  m.lambda = 0.5;
  b.lambda = 1.0;
  CHECK(std::abs(generalization_bound(m) - 0.5 * (generalization_bound(a) + generalization_bound(b))) <= 1e-12);

  // Collapse to the complexity term.
  BoundParams big = pinned();
  big.lambda = 1.0;
  big.theta_norm = 0.0;
  big.sigma_min = 1e12;
  big.n_p = big.n_q = 1e18;
  CHECK(generalization_bound(big) == doctest::Approx(big.complexity_term).epsilon(1e-6));

  // Drift adds 2 (1 + lambda) d_e.
  BoundParams drift = pinned();
  drift.drift = 0.01;
  CHECK(generalization_bound(drift) - generalization_bound(pinned()) == doctest::Approx(2 * 1.7 * 0.01).epsilon(1e-10));
  drift.drift_in_epsilon_theta = true;
  CHECK(generalization_bound(drift) - generalization_bound(pinned()) ==
        doctest::Approx(2 * 1.7 * 0.01 + 0.7 * 2 * 0.01 / 0.12).epsilon(1e-10));
}

TEST_CASE("monotone along every axis") {
  auto check_axis = [](auto mutate, bool increasing) {
    for (auto fn : {generalization_bound, crude_bound}) {
      BoundParams lo = pinned();
      BoundParams hi = pinned();
      mutate(hi);
      if (increasing) {
        CHECK(fn(hi) > fn(lo));
      } else {
        CHECK(fn(hi) < fn(lo));
      }
    }
  };
  check_axis([](BoundParams& p) { p.n_p *= 2; }, false);
  check_axis([](BoundParams& p) { p.n_q *= 2; }, false);
  check_axis([](BoundParams& p) { p.sigma_min *= 2; }, false);
  check_axis([](BoundParams& p) { p.k *= 2; }, true);
  check_axis([](BoundParams& p) { p.delta /= 10; }, true);
  check_axis([](BoundParams& p) {
    p.theta_norm *= 1.5;
    p.theta_max *= 1.5;
  }, true);
}

TEST_CASE("streaming bound") {
  BoundParams p = pinned();
  BoundParams one = p;
  one.n_q = 1;
  CHECK(streaming_bound(p, 1) == doctest::Approx(generalization_bound(one)).epsilon(1e-15));
  const BoundParams q = pinned();
  CHECK(streaming_bound(q, 100) ==
        doctest::Approx(ref_bound(5000, 100, 0.4, 0.7, 0.05 / 100, 8, 2.5, 0.12, 3.5, 2.2, 0.03)).epsilon(1e-13));
  // The inflation log(t/delta) grows with t.
  for (long t = 1; t < 1000; t *= 3) CHECK(std::log(3.0 * t / p.delta) > std::log(3.0 * (t - 0.5) / p.delta));
  CHECK(code_of([&] { streaming_bound(p, 0); }) == ErrorCode::InvalidParams);
}

TEST_CASE("lambda threshold") {
  CHECK(lambda_threshold(1e4, 4.216, 0.08) == doctest::Approx(11.5).epsilon(0.01));
  CHECK(lambda_threshold(1e4, 4.216, 0.08) ==
        doctest::Approx(1.0 / (4.216 * 4.216 * 0.07 * 0.07)).epsilon(1e-12));
  CHECK(lambda_threshold(1e4, 8.432, 0.08) == doctest::Approx(lambda_threshold(1e4, 4.216, 0.08) / 4).epsilon(1e-14));
  CHECK(code_of([] { lambda_threshold(1e4, 4.0, 0.01); }) == ErrorCode::BelowCritical);
  CHECK(code_of([] { lambda_threshold(1e4, 4.0, 0.005); }) == ErrorCode::BelowCritical);

  const auto curve = threshold_curve(1e4, 4.0);
  REQUIRE(curve.size() == 200);
  CHECK(curve.front().sigma_min == doctest::Approx(1.001 / 100).epsilon(1e-14));
  CHECK(curve.back().sigma_min == 1.0);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].sigma_min > curve[i - 1].sigma_min);
    CHECK(curve[i].n_q_threshold < curve[i - 1].n_q_threshold);
    CHECK(rel_diff(curve[i].n_q_threshold, ref_lambda_threshold(1e4, 4.0, curve[i].sigma_min)) <= 1e-12);
  }
}

TEST_CASE("finite-class complexity") {
  const double l = std::log(1000.0) + std::log(3.0 / 0.05);
  const double n = 0.5 * 4000;
  CHECK(finite_class_complexity(std::log(1000.0), 2.0, 3.0, 0.5, 4000, 0.05) ==
        doctest::Approx(std::sqrt(8 * 2.0 * l / n) + 2 * 3.0 * l / (3 * n)).epsilon(1e-14));
  CHECK(finite_class_complexity(0.0, 1.0, 1.0, 0.5, 8000, 0.05) <
        finite_class_complexity(0.0, 1.0, 1.0, 0.5, 4000, 0.05));
  CHECK(code_of([] { finite_class_complexity(-1.0, 1, 1, 0.5, 100, 0.1); }) == ErrorCode::InvalidParams);
}

TEST_CASE("bound parameter validation") {
  BoundParams p = pinned();
  p.delta = 0.7;
  CHECK(code_of([&] { generalization_bound(p); }) == ErrorCode::InvalidParams);
  p = pinned();
  p.lambda = 1.1;
  CHECK(code_of([&] { crude_bound(p); }) == ErrorCode::InvalidParams);
  p = pinned();
  p.d = 0.5;
  CHECK(code_of([&] { epsilon_G(p); }) == ErrorCode::InvalidParams);
}

TEST_CASE("drift is zero under exact label shift") {
  Rng rng(13);
  const Eigen::MatrixXd means = random_matrix(rng, 4, 3, 2.0);
  const GaussianConditionals q(means), p(means);
  const DriftEstimate e = drift_term(q, p, LabelDist::uniform(4), 5000, 1);
  CHECK(e.value == 0.0);
  CHECK(e.std_error == 0.0);
}

TEST_CASE("drift increases with the conditional perturbation") {
  Rng rng(14);
  const Eigen::MatrixXd means = random_matrix(rng, 3, 2, 2.0);
  const GaussianConditionals q(means);
  double prev = -1.0;
  for (double eps : {0.0, 0.1, 0.5}) {
    Eigen::MatrixXd shifted = means;
    shifted(0, 0) += eps;
    const DriftEstimate e = drift_term(q, GaussianConditionals(shifted), LabelDist::uniform(3), 20000, 2);
    CHECK(e.value >= 0.0);
    CHECK(e.value > prev);
    prev = e.value;
  }
}

TEST_CASE("drift matches quadrature in one dimension") {
  // Class 0 has q = N(0, 1) and p = N(eps, 1); class 1 is unshifted.
  const double eps = 0.8;
  Eigen::MatrixXd qm(2, 1), pm(2, 1);
  qm << 0.0, 3.0;
  pm << eps, 3.0;
  const LabelDist q(Eigen::Vector2d(0.4, 0.6));
  auto integrand = [&](double x) {
    const double phi = std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi);
    const double ratio = std::exp(-0.5 * (x - eps) * (x - eps) + 0.5 * x * x);
    return phi * std::abs(1.0 - ratio);
  };
  const double exact = 0.4 * simpson(integrand, -14.0, 14.0, 20000);
  const DriftEstimate e = drift_term(GaussianConditionals(qm), GaussianConditionals(pm), q, 100000, 3);
  CHECK(std::abs(e.value - exact) <= 3.0 * e.std_error);
  CHECK(e.std_error > 0.0);
}

TEST_CASE("drift errors") {
  const GaussianConditionals g(Eigen::MatrixXd::Zero(2, 1));
  CHECK(code_of([&] { drift_term(g, g, LabelDist::uniform(2), 1, 0); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { GaussianConditionals(Eigen::MatrixXd::Zero(2, 1), 0.0); }) == ErrorCode::InvalidParams);
}

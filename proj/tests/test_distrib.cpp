#include "doctest.h"

#include "lshift/distrib.hpp"
#include "lshift/error.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <vector>

using namespace lshift;
using lshift::testing::random_dist;
using lshift::testing::uniform_int;
using lshift::testing::uniform_real;

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

int argmax(const Eigen::VectorXd& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

}  // namespace

TEST_CASE("LabelDist rejects invalid vectors") {
  CHECK(code_of([] { LabelDist(Eigen::VectorXd::Ones(1)); }) == ErrorCode::InvalidDistribution);
  CHECK(code_of([] { LabelDist(Eigen::Vector2d(0.7, 0.4)); }) == ErrorCode::InvalidDistribution);
  CHECK(code_of([] { LabelDist(Eigen::Vector3d(1.2, -0.2, 0.0)); }) == ErrorCode::InvalidDistribution);
  CHECK_NOTHROW(LabelDist(Eigen::Vector3d(0.5, 0.5, 0.0)));
}

TEST_CASE("uniform shift") {
  const LabelDist p = make_shift({ShiftKind::Uniform}, 10);
  for (int i = 0; i < 10; ++i) CHECK(p[i] == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("tweak-one shift puts rho on one class") {
  ShiftSpec spec{ShiftKind::TweakOne, 0.5};
  spec.seed = 7;
  const LabelDist p = make_shift(spec, 10);
  const int c = argmax(p.probs());
  CHECK(p[c] == doctest::Approx(0.5).epsilon(1e-15));
  for (int i = 0; i < 10; ++i) {
    if (i != c) CHECK(p[i] == doctest::Approx(0.5 / 9).epsilon(1e-14));
  }
  // The chosen class follows the seed and covers more than one index.
  std::vector<int> seen;
  for (std::uint64_t s = 0; s < 40; ++s) {
    spec.seed = s;
    seen.push_back(argmax(make_shift(spec, 10).probs()));
  }
  std::sort(seen.begin(), seen.end());
  CHECK(std::unique(seen.begin(), seen.end()) - seen.begin() > 3);
}

TEST_CASE("minority-class shift") {
  ShiftSpec spec;
  spec.kind = ShiftKind::MinorityClass;
  spec.m = 5;
  spec.p_minor = 0.01;
  spec.seed = 3;
  const LabelDist p = make_shift(spec, 10);
  int minor = 0;
  for (int i = 0; i < 10; ++i) {
    if (std::abs(p[i] - 0.01) < 1e-15) {
      ++minor;
    } else {
      CHECK(p[i] == doctest::Approx(0.95 / 5).epsilon(1e-14));
    }
  }
  CHECK(minor == 5);
}

TEST_CASE("dirichlet shift lies in the open simplex") {
  ShiftSpec spec;
  spec.kind = ShiftKind::Dirichlet;
  spec.alpha = 10.0;
  spec.seed = 11;
  const LabelDist p = make_shift(spec, 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(p[i] > 0.0);
    CHECK(p[i] < 1.0);
  }
  CHECK(p.probs().sum() == doctest::Approx(1.0).epsilon(1e-12));
  spec.alpha = 0.01;  // small alpha must still produce a valid distribution
  CHECK_NOTHROW(make_shift(spec, 10));
}

TEST_CASE("invalid shift specs") {
  CHECK(code_of([] { make_shift({ShiftKind::TweakOne, 0.05}, 10); }) == ErrorCode::InvalidSpec);
  CHECK(code_of([] { make_shift({ShiftKind::TweakOne, 1.0}, 10); }) == ErrorCode::InvalidSpec);
  ShiftSpec minority;
  minority.kind = ShiftKind::MinorityClass;
  minority.p_minor = 0.2;
  CHECK(code_of([&] { make_shift(minority, 10); }) == ErrorCode::InvalidSpec);
  ShiftSpec dir;
  dir.kind = ShiftKind::Dirichlet;
  dir.alpha = 0.0;
  CHECK(code_of([&] { make_shift(dir, 10); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("make_shift output is always a valid distribution") {
  Rng rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = uniform_int(rng, 2, 30);
    ShiftSpec spec;
    spec.seed = rng();
    switch (uniform_int(rng, 0, 3)) {
      case 0:
        spec.kind = ShiftKind::Uniform;
        break;
      case 1:
        spec.kind = ShiftKind::TweakOne;
        spec.rho = uniform_real(rng, 1.0 / k + 1e-6, 1.0 - 1e-6);
        break;
      case 2:
        spec.kind = ShiftKind::MinorityClass;
        spec.m = uniform_int(rng, 1, k - 1);
        spec.p_minor = uniform_real(rng, 1e-6, 1.0 / k - 1e-6);
        break;
      default:
        spec.kind = ShiftKind::Dirichlet;
        spec.alpha = std::exp(uniform_real(rng, std::log(0.01), std::log(10.0)));
        break;
    }
    const LabelDist p = make_shift(spec, k);
    REQUIRE(p.size() == k);
    CHECK(p.probs().minCoeff() >= 0.0);
    CHECK(std::abs(p.probs().sum() - 1.0) <= LabelDist::kSumTolerance);
  }
}

TEST_CASE("importance weights") {
  const LabelDist p = LabelDist::uniform(10);
  ShiftSpec spec{ShiftKind::TweakOne, 0.5};
  const LabelDist q = make_shift(spec, 10);
  const int c = argmax(q.probs());
  const Eigen::VectorXd w = importance_weights(q, p);
  CHECK(w(c) == doctest::Approx(5.0).epsilon(1e-14));
  for (int i = 0; i < 10; ++i) {
    if (i != c) CHECK(w(i) == doctest::Approx(0.5 / 9 / 0.1).epsilon(1e-14));
  }
  CHECK((importance_weights(q, q).array() == 1.0).all());
  CHECK(code_of([] { importance_weights(LabelDist(Eigen::Vector2d(1, 0)), LabelDist(Eigen::Vector2d(0, 1))); }) ==
        ErrorCode::UnsupportedClass);
  // Jointly null classes get weight 0.
  const Eigen::VectorXd w0 =
      importance_weights(LabelDist(Eigen::Vector3d(0.5, 0.5, 0)), LabelDist(Eigen::Vector3d(0.25, 0.75, 0)));
  CHECK(w0(2) == 0.0);
}

TEST_CASE("shift metrics") {
  const LabelDist p = LabelDist::uniform(10);
  const LabelDist q = make_shift({ShiftKind::TweakOne, 0.5}, 10);
  const ShiftMetrics m = shift_metrics(q, p);
  CHECK(m.d_inf == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(m.d == doctest::Approx(0.25 / 0.1 + 9 * (0.5 / 9) * (0.5 / 9) / 0.1).epsilon(1e-13));
  CHECK(m.d == doctest::Approx(2.7778).epsilon(1e-4));
  const ShiftMetrics m2 = shift_metrics(LabelDist(Eigen::Vector2d(0.9, 0.1)), LabelDist::uniform(2));
  CHECK(m2.d_inf == doctest::Approx(1.8).epsilon(1e-14));
  CHECK(m2.d == doctest::Approx(1.64).epsilon(1e-14));
  const ShiftMetrics same = shift_metrics(p, p);
  CHECK(same.d == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(same.d_inf == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("importance-weight identities over random pairs") {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = uniform_int(rng, 2, 25);
    const LabelDist p = random_dist(rng, k);
    const LabelDist q = random_dist(rng, k);
    const Eigen::VectorXd w = importance_weights(q, p);
    const ShiftMetrics m = shift_metrics(q, p);
    CHECK(p.probs().dot(w) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q.probs().dot(w) == doctest::Approx(m.d).epsilon(1e-12));
    CHECK(m.d <= m.d_inf * (1 + 1e-12));
    CHECK(m.d >= 1.0 - 1e-12);
    CHECK(m.d_inf >= 1.0 - 1e-12);
  }
}

TEST_CASE("sample_labels") {
  Eigen::VectorXd point = Eigen::VectorXd::Zero(5);
  point(3) = 1.0;
  CHECK(sample_labels(LabelDist(point), 5, 1) == Labels{3, 3, 3, 3, 3});
  CHECK(code_of([] { sample_labels(LabelDist::uniform(3), 0, 1); }) == ErrorCode::EmptyInput);

  const Labels ys = sample_labels(LabelDist::uniform(10), 100000, 5);
  std::vector<int> counts(10);
  for (int y : ys) ++counts[static_cast<std::size_t>(y)];
  for (int c : counts) CHECK(std::abs(c / 1e5 - 0.1) <= 0.01);
  CHECK(sample_labels(LabelDist::uniform(10), 50, 5) == sample_labels(LabelDist::uniform(10), 50, 5));
  CHECK(sample_labels(LabelDist::uniform(10), 50, 5) != sample_labels(LabelDist::uniform(10), 50, 6));

  // Zero-mass classes are never drawn.
  const Labels zs = sample_labels(LabelDist(Eigen::Vector3d(0.5, 0.0, 0.5)), 10000, 8);
  CHECK(std::count(zs.begin(), zs.end(), 1) == 0);
}

TEST_CASE("WeightShift clips at zero") {
  WeightShift ws{Eigen::Vector3d(-1.5, 0.5, 0.0), 1.0};
  const Eigen::VectorXd w = ws.weights();
  CHECK(w(0) == 0.0);
  CHECK(w(1) == 1.5);
  ws.lambda_applied = 0.5;
  CHECK(ws.weights()(0) == 0.25);
}

TEST_CASE("csv round trip") {
  Rng rng(4);
  const LabelDist p = random_dist(rng, 7);
  const LabelDist back = label_dist_from_csv_row(to_csv_row(p));
  CHECK(back.probs() == p.probs());
}

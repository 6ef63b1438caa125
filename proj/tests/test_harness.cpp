#include "doctest.h"

#include "lshift/error.hpp"
#include "lshift/harness.hpp"
#include "test_util.hpp"

#include <cmath>
#include <sstream>

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

ExperimentConfig small_config() {
  ExperimentConfig cfg = ExperimentConfig::preset("tweak_one");
  cfg.k = 5;
  cfg.d = 5;
  cfg.n_p = 600;
  cfg.n_q = 300;
  cfg.trials = 3;
  return cfg;
}

}  // namespace

TEST_CASE("mixture shares conditionals across label distributions") {
  const GaussianMixture gm(4, 3, 77);
  Eigen::VectorXd skew(4);
  skew << 0.7, 0.1, 0.1, 0.1;
  const LabeledDataset a = gm.sample(LabelDist::uniform(4), 20000, 1);
  const LabeledDataset b = gm.sample(LabelDist(skew), 20000, 2);
  for (int c = 0; c < 4; ++c) {
    Eigen::VectorXd ma = Eigen::VectorXd::Zero(3), mb = Eigen::VectorXd::Zero(3);
    int na = 0, nb = 0;
    for (int i = 0; i < a.n(); ++i) {
      if (a.labels[static_cast<std::size_t>(i)] == c) {
        ma += a.features.row(i).transpose();
        ++na;
      }
      if (b.labels[static_cast<std::size_t>(i)] == c) {
        mb += b.features.row(i).transpose();
        ++nb;
      }
    }
    ma /= na;
    mb /= nb;
    const double tol = 4.0 / std::sqrt(std::min(na, nb));
    CHECK((ma - mb).cwiseAbs().maxCoeff() <= tol);
    CHECK((ma - gm.means().row(c).transpose()).cwiseAbs().maxCoeff() <= tol);
  }
  // Same construction seed, same means.
  CHECK(GaussianMixture(4, 3, 77).means() == gm.means());
}

TEST_CASE("mixture edge cases") {
  Eigen::VectorXd point = Eigen::VectorXd::Zero(3);
  point(2) = 1.0;
  const LabeledDataset d = gen_gaussian_mixture(3, 2, LabelDist(point), 50, 4);
  for (int y : d.labels) CHECK(y == 2);
  CHECK(code_of([] { gen_gaussian_mixture(3, 2, LabelDist::uniform(3), 0, 4); }) == ErrorCode::EmptyInput);
}

TEST_CASE("macro F1") {
  CHECK(macro_f1({0, 1, 2, 1}, {0, 1, 2, 1}, 3) == 1.0);
  CHECK(macro_f1({0, 0, 0, 0}, {0, 0, 1, 1}, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(code_of([] { macro_f1({0}, {0, 1}, 2); }) == ErrorCode::LengthMismatch);

  Rng rng(30);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = uniform_int(rng, 2, 6);
    const int n = uniform_int(rng, 1, 40);
    Labels p, y;
    for (int i = 0; i < n; ++i) {
      p.push_back(uniform_int(rng, 0, k - 1));
      y.push_back(uniform_int(rng, 0, k - 1));
    }
    double total = 0.0;
    for (int c = 0; c < k; ++c) {
      int tp = 0, fp = 0, fn = 0;
      for (int i = 0; i < n; ++i) {
        tp += p[i] == c && y[i] == c;
        fp += p[i] == c && y[i] != c;
        fn += p[i] != c && y[i] == c;
      }
      // F1 = 2 tp / (2 tp + fp + fn), zero when tp = 0.
      total += tp > 0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
    }
    const double f1 = macro_f1(p, y, k);
    CHECK(f1 == doctest::Approx(total / k).epsilon(1e-12));
    CHECK(f1 >= 0.0);
    CHECK(f1 <= 1.0);
  }
}

TEST_CASE("accuracy, median and mean") {
  CHECK(accuracy({0, 1, 1}, {0, 1, 0}) == doctest::Approx(2.0 / 3.0));
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(std::isnan(median({})));
  CHECK(mean({1.0, 2.0}) == 1.5);
}

TEST_CASE("presets") {
  CHECK(ExperimentConfig::preset("tweak_one").source_shift.kind == ShiftKind::TweakOne);
  CHECK(ExperimentConfig::preset("tweak_one").source_shift.rho == 0.8);
  CHECK(ExperimentConfig::preset("tweak_one").h0_shift.rho == 0.5);
  const ExperimentConfig minority = ExperimentConfig::preset("minority_class");
  CHECK(minority.source_shift.m == 5);
  CHECK(minority.source_shift.p_minor == 0.01);
  CHECK(ExperimentConfig::preset("dirichlet_target").target_shift.kind == ShiftKind::Dirichlet);
  const ExperimentConfig low = ExperimentConfig::preset("low_sample");
  CHECK(low.n_p == 1000);
  CHECK(low.lambdas == std::vector<double>{0.0, 1.0});
  for (const char* name : {"tweak_one", "minority_class", "dirichlet_target", "low_sample", "default"}) {
    CHECK_NOTHROW(ExperimentConfig::preset(name).validate());
  }
  CHECK(code_of([] { ExperimentConfig::preset("cifar"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("config parsing") {
  std::istringstream in(
      "preset = minority_class\n"
      "k = 6  # classes\n"
      "n_p = 500\n"
      "methods = rlls, bbsl\n"
      "lambda_mode = fixed\n"
      "lambdas = 0, 0.5, 1\n"
      "target_shift = dirichlet\n"
      "target_alpha = 0.1\n"
      "delta_scale = 0.02\n"
      "step_rule = backtracking\n"
      "h0_epochs = 20\n");
  const KeyValueConfig kv = KeyValueConfig::parse(in);
  const ExperimentConfig cfg = ExperimentConfig::from_config(kv);
  CHECK(cfg.k == 6);
  CHECK(cfg.n_p == 500);
  CHECK(cfg.source_shift.kind == ShiftKind::MinorityClass);
  CHECK(cfg.methods == std::vector<Method>{Method::Rlls, Method::Bbsl});
  CHECK(cfg.lambdas.size() == 3);
  CHECK(cfg.target_shift.alpha == 0.1);
  CHECK(cfg.solver.delta_scale == 0.02);
  CHECK(cfg.solver.step_rule == StepRule::Backtracking);
  CHECK(cfg.h0_train.epochs == 20);
  CHECK(kv.unused_keys().empty());

  std::istringstream bad("beta = 1.5\n");
  CHECK(code_of([&] { ExperimentConfig::from_config(KeyValueConfig::parse(bad)); }) == ErrorCode::InvalidBeta);
  std::istringstream typo("lambda_mod = fixed\n");
  const KeyValueConfig kv2 = KeyValueConfig::parse(typo);
  ExperimentConfig::from_config(kv2);
  CHECK(kv2.unused_keys() == std::vector<std::string>{"lambda_mod"});
}

TEST_CASE("experiment is deterministic and ordered") {
  const ExperimentConfig cfg = small_config();
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  REQUIRE(a.size() == 4 * 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].method == b[i].method);
    CHECK(a[i].trial == b[i].trial);
    CHECK(a[i].weights == b[i].weights);
    CHECK(a[i].accuracy == b[i].accuracy);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].method == cfg.methods[i / 3]);
    CHECK(a[i].trial == static_cast<int>(i % 3));
    CHECK(a[i].ok());
    CHECK(a[i].macro_f1 >= 0.0);
    CHECK(a[i].macro_f1 <= 1.0);
    if (a[i].method == Method::Oracle) CHECK(a[i].weight_mse == 0.0);
    if (a[i].method == Method::Unweighted) CHECK((a[i].weights.array() == 1.0).all());
  }
}

TEST_CASE("fixed lambda list yields one record per lambda") {
  ExperimentConfig cfg = small_config();
  cfg.methods = {Method::Rlls, Method::Unweighted};
  cfg.lambdas = {0.0, 0.5, 1.0};
  const auto recs = run_experiment(cfg);
  REQUIRE(recs.size() == 3 * 3 + 3);
  for (int s = 0; s < 3; ++s) {
    for (int t = 0; t < 3; ++t) {
      const auto& r = recs[static_cast<std::size_t>(s * 3 + t)];
      CHECK(r.lambda_slot == s);
      CHECK(r.lambda_used == cfg.lambdas[static_cast<std::size_t>(s)]);
    }
  }
  // lambda = 0 weights are exactly one.
  CHECK((recs[0].weights.array() == 1.0).all());
  const auto summary = summarize(recs);
  REQUIRE(summary.size() == 4);
  CHECK(summary[1].mean_lambda == 0.5);
  CHECK(summary[3].method == Method::Unweighted);
}

TEST_CASE("rule mode picks lambda from sigma_min") {
  ExperimentConfig cfg = small_config();
  cfg.methods = {Method::Rlls};
  cfg.lambda_mode = LambdaMode::Rule;
  for (const auto& r : run_experiment(cfg)) {
    const double gap = r.sigma_min_observed - 1.0 / std::sqrt(cfg.n_p);
    const bool on = gap > 0.0 && cfg.n_q >= 1.0 / (cfg.theta_max * cfg.theta_max * gap * gap);
    CHECK(r.lambda_used == (on ? 1.0 : 0.0));
  }
}

TEST_CASE("per-trial failures are recorded and the run continues") {
  ExperimentConfig cfg = small_config();
  cfg.solver.max_iters = 1;
  cfg.solver.delta_scale = 1e-6;
  cfg.solver.rho_grid_max_exponent = 0;
  const auto recs = run_experiment(cfg);
  REQUIRE(recs.size() == 12);
  for (const auto& r : recs) {
    if (r.method == Method::Rlls) {
      CHECK_FALSE(r.ok());
      CHECK(std::isnan(r.accuracy));
    } else {
      CHECK(r.ok());
    }
  }
  std::ostringstream csv, jsonl;
  write_metrics_csv(csv, recs);
  write_metrics_jsonl(jsonl, recs);
  CHECK(csv.str().find("NonConvergence") != std::string::npos);
  CHECK(jsonl.str().find("\"error\"") != std::string::npos);
  CHECK(summarize(recs)[0].trials_ok == 0);
}

TEST_CASE("writers") {
  const auto recs = run_experiment(small_config());
  std::ostringstream csv, jsonl, sum;
  write_metrics_csv(csv, recs);
  write_metrics_jsonl(jsonl, recs);
  write_summary_csv(sum, summarize(recs));
  int lines = 0;
  for (char c : csv.str()) lines += c == '\n';
  CHECK(lines == 13);
  CHECK(csv.str().find('\r') == std::string::npos);
  lines = 0;
  for (char c : jsonl.str()) lines += c == '\n';
  CHECK(lines == 12);
  CHECK(sum.str().rfind("method,lambda_slot,mean_lambda,trials_ok", 0) == 0);
}

TEST_CASE("no shift: rlls and unweighted accuracies agree") {
  ExperimentConfig cfg;
  cfg.k = 5;
  cfg.d = 5;
  cfg.n_p = 2000;
  cfg.n_q = 2000;
  cfg.trials = 20;
  cfg.methods = {Method::Rlls, Method::Unweighted};
  const auto summary = summarize(run_experiment(cfg));
  CHECK(std::abs(summary[0].median_accuracy - summary[1].median_accuracy) <= 0.02);
}

TEST_CASE("oracle weights help under a large source shift") {
  ExperimentConfig cfg = ExperimentConfig::preset("tweak_one");
  cfg.n_p = 2000;
  cfg.n_q = 2000;
  cfg.methods = {Method::Oracle, Method::Unweighted};
  const auto summary = summarize(run_experiment(cfg));
  CHECK(summary[0].median_accuracy >= summary[1].median_accuracy);
}

TEST_CASE("tweak-one preset: rlls beats bbsl on weight error") {
  ExperimentConfig cfg = ExperimentConfig::preset("tweak_one");
  cfg.methods = {Method::Rlls, Method::Bbsl};
  const auto summary = summarize(run_experiment(cfg));
  CHECK(summary[0].median_weight_mse < summary[1].median_weight_mse);
}

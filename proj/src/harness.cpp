#include "lshift/harness.hpp"

#include "lshift/error.hpp"
#include "lshift/random.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

namespace lshift {

GaussianMixture::GaussianMixture(int k, int d, std::uint64_t seed, double mean_scale) {
  if (k < 2 || d < 1) throw Error(ErrorCode::InvalidParams, "mixture needs k >= 2 and d >= 1");
  if (!(mean_scale > 0.0)) throw Error(ErrorCode::InvalidParams, "mean_scale must be > 0");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, mean_scale);
  means_.resize(k, d);
  for (int c = 0; c < k; ++c) {
    for (int j = 0; j < d; ++j) means_(c, j) = normal(rng);
  }
}

LabeledDataset GaussianMixture::sample(const LabelDist& dist, int n, std::uint64_t seed) const {
  if (dist.size() != k()) throw Error(ErrorCode::DimensionMismatch, "label distribution has the wrong k");
  if (n < 1) throw Error(ErrorCode::EmptyInput, "cannot generate an empty dataset");
  return sample_labels_given(sample_labels(dist, n, derive_seed(seed, {0})), derive_seed(seed, {1}));
}

LabeledDataset GaussianMixture::sample_labels_given(const Labels& labels, std::uint64_t seed) const {
  if (labels.empty()) throw Error(ErrorCode::EmptyInput, "cannot generate an empty dataset");
  LabeledDataset data;
  data.k = k();
  data.labels = labels;
  data.features.resize(static_cast<Eigen::Index>(labels.size()), d());
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (int j = 0; j < d(); ++j) {
      data.features(static_cast<Eigen::Index>(i), j) = means_(labels[i], j) + noise(rng);
    }
  }
  return data;
}

LabeledDataset gen_gaussian_mixture(int k, int d, const LabelDist& label_dist, int n, std::uint64_t seed,
                                    double mean_scale) {
  return GaussianMixture(k, d, seed, mean_scale).sample(label_dist, n, derive_seed(seed, {0x5a}));
}

double accuracy(const Labels& preds, const Labels& labels) {
  if (preds.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "preds and labels differ in length");
  if (preds.empty()) throw Error(ErrorCode::EmptyInput, "no predictions");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double macro_f1(const Labels& preds, const Labels& labels, int k) {
  if (preds.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "preds and labels differ in length");
  std::vector<double> tp(static_cast<std::size_t>(k)), fp(tp), fn(tp);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto p = static_cast<std::size_t>(preds[i]);
    const auto y = static_cast<std::size_t>(labels[i]);
    if (p == y) {
      tp[p] += 1;
    } else {
      fp[p] += 1;
      fn[y] += 1;
    }
  }
  double total = 0.0;
  for (std::size_t c = 0; c < tp.size(); ++c) {
    const double precision = tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
    const double recall = tp[c] + fn[c] > 0 ? tp[c] / (tp[c] + fn[c]) : 0.0;
    if (precision + recall > 0.0) total += 2.0 * precision * recall / (precision + recall);
  }
  return total / k;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw Error(ErrorCode::InvalidConfig, "trials must be >= 1");
  if (k < 2 || d < 1) throw Error(ErrorCode::InvalidConfig, "need k >= 2 and d >= 1");
  if (n_p < 2 || n_q < 1 || n_h0 < 0 || n_eval < 0) throw Error(ErrorCode::InvalidConfig, "sample sizes out of range");
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorCode::InvalidBeta, "beta must lie in (0, 1)");
  if (!(delta > 0.0 && delta <= 0.5)) throw Error(ErrorCode::InvalidDelta, "delta must lie in (0, 0.5]");
  if (!(theta_max > 0.0)) throw Error(ErrorCode::InvalidConfig, "theta_max must be > 0");
  if (methods.empty()) throw Error(ErrorCode::InvalidConfig, "no methods selected");
  if (lambda_mode == LambdaMode::Fixed) {
    if (lambdas.empty()) throw Error(ErrorCode::InvalidConfig, "fixed lambda mode needs a lambda list");
    for (double l : lambdas) {
      if (!(l >= 0.0 && l <= 1.0)) throw Error(ErrorCode::InvalidConfig, "lambdas must lie in [0, 1]");
    }
  }
  if (data_source == DataSource::IdxFiles && (idx_images.empty() || idx_labels.empty())) {
    throw Error(ErrorCode::InvalidConfig, "idx_files data source needs idx_images and idx_labels");
  }
  source_shift.validate(k);
  target_shift.validate(k);
  h0_shift.validate(k);
  solver.validate();
  train.validate();
  h0_train.validate();
}

ExperimentConfig ExperimentConfig::preset(const std::string& name) {
  ExperimentConfig cfg;
  if (name == "tweak_one") {
    cfg.source_shift = {ShiftKind::TweakOne, 0.8};
    cfg.h0_shift = {ShiftKind::TweakOne, 0.5};
  } else if (name == "minority_class") {
    cfg.source_shift.kind = ShiftKind::MinorityClass;
    cfg.source_shift.m = 5;
    cfg.source_shift.p_minor = 0.01;
  } else if (name == "dirichlet_target") {
    cfg.target_shift.kind = ShiftKind::Dirichlet;
    cfg.target_shift.alpha = 1.0;
  } else if (name == "low_sample") {
    cfg.n_p = 1000;
    cfg.source_shift.kind = ShiftKind::MinorityClass;
    cfg.source_shift.m = 5;
    cfg.source_shift.p_minor = 0.01;
    cfg.h0_shift = {ShiftKind::TweakOne, 0.8};
    cfg.methods = {Method::Rlls};
    cfg.lambda_mode = LambdaMode::Fixed;
    cfg.lambdas = {0.0, 1.0};
    cfg.mean_scale = 1.5;
    cfg.n_eval = 5000;
  } else if (name != "default") {
    throw Error(ErrorCode::InvalidConfig, "unknown preset '" + name + "'");
  }
  return cfg;
}

namespace {

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::InvalidConfig, "expected a boolean, got '" + v + "'");
}

ShiftSpec read_shift(const KeyValueConfig& kv, const std::string& prefix, ShiftSpec spec) {
  if (auto kind = kv.get(prefix + "_shift")) spec.kind = parse_shift_kind(*kind);
  spec.rho = kv.get_double(prefix + "_rho", spec.rho);
  spec.m = static_cast<int>(kv.get_int(prefix + "_m", spec.m));
  spec.p_minor = kv.get_double(prefix + "_p_minor", spec.p_minor);
  spec.alpha = kv.get_double(prefix + "_alpha", spec.alpha);
  return spec;
}

TrainConfig read_train(const KeyValueConfig& kv, const std::string& prefix, TrainConfig t) {
  t.learning_rate = kv.get_double(prefix + "learning_rate", t.learning_rate);
  t.epochs = static_cast<int>(kv.get_int(prefix + "epochs", t.epochs));
  t.l2_penalty = kv.get_double(prefix + "l2_penalty", t.l2_penalty);
  return t;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& kv) {
  ExperimentConfig cfg = preset(kv.get_string("preset", "default"));
  cfg.k = static_cast<int>(kv.get_int("k", cfg.k));
  cfg.d = static_cast<int>(kv.get_int("d", cfg.d));
  cfg.n_p = static_cast<int>(kv.get_int("n_p", cfg.n_p));
  cfg.n_q = static_cast<int>(kv.get_int("n_q", cfg.n_q));
  cfg.n_h0 = static_cast<int>(kv.get_int("n_h0", cfg.n_h0));
  cfg.n_eval = static_cast<int>(kv.get_int("n_eval", cfg.n_eval));
  cfg.beta = kv.get_double("beta", cfg.beta);
  cfg.source_shift = read_shift(kv, "source", cfg.source_shift);
  cfg.target_shift = read_shift(kv, "target", cfg.target_shift);
  cfg.h0_shift = read_shift(kv, "h0", cfg.h0_shift);
  if (auto methods = kv.get("methods")) {
    cfg.methods.clear();
    for (const auto& m : split_csv_line(*methods)) cfg.methods.push_back(parse_method(m));
  }
  cfg.trials = static_cast<int>(kv.get_int("trials", cfg.trials));
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long>(cfg.seed)));
  cfg.delta = kv.get_double("delta", cfg.delta);
  cfg.theta_max = kv.get_double("theta_max", cfg.theta_max);
  if (auto mode = kv.get("lambda_mode")) {
    if (*mode == "rule") {
      cfg.lambda_mode = LambdaMode::Rule;
    } else if (*mode == "fixed") {
      cfg.lambda_mode = LambdaMode::Fixed;
    } else {
      throw Error(ErrorCode::InvalidConfig, "lambda_mode must be 'rule' or 'fixed'");
    }
  }
  cfg.lambdas = kv.get_doubles("lambdas", cfg.lambdas);
  if (auto c = kv.get("continuous_lambda")) cfg.continuous_lambda = parse_bool(*c);
  if (auto src = kv.get("data_source")) {
    if (*src == "gaussian_mixture") {
      cfg.data_source = DataSource::GaussianMixture;
    } else if (*src == "idx_files") {
      cfg.data_source = DataSource::IdxFiles;
    } else {
      throw Error(ErrorCode::InvalidConfig, "data_source must be 'gaussian_mixture' or 'idx_files'");
    }
  }
  cfg.idx_images = kv.get_string("idx_images", cfg.idx_images.string());
  cfg.idx_labels = kv.get_string("idx_labels", cfg.idx_labels.string());
  cfg.mean_scale = kv.get_double("mean_scale", cfg.mean_scale);
  if (auto h0 = kv.get("h0_training")) {
    if (*h0 == "shifted_pool") {
      cfg.h0_training = H0Training::ShiftedPool;
    } else if (*h0 == "weight_split") {
      cfg.h0_training = H0Training::WeightSplit;
    } else if (*h0 == "full_source") {
      cfg.h0_training = H0Training::FullSource;
    } else {
      throw Error(ErrorCode::InvalidConfig, "h0_training must be shifted_pool, weight_split or full_source");
    }
  }
  cfg.solver.delta_scale = kv.get_double("delta_scale", cfg.solver.delta_scale);
  cfg.solver.max_iters = static_cast<int>(kv.get_int("max_iters", cfg.solver.max_iters));
  cfg.solver.tol = kv.get_double("solver_tol", cfg.solver.tol);
  cfg.solver.rho_grid_max_exponent =
      static_cast<int>(kv.get_int("rho_grid_max_exponent", cfg.solver.rho_grid_max_exponent));
  if (auto rule = kv.get("step_rule")) {
    if (*rule == "fixed") {
      cfg.solver.step_rule = StepRule::Fixed;
    } else if (*rule == "backtracking") {
      cfg.solver.step_rule = StepRule::Backtracking;
    } else {
      throw Error(ErrorCode::InvalidConfig, "step_rule must be 'fixed' or 'backtracking'");
    }
  }
  cfg.train = read_train(kv, "", cfg.train);
  cfg.h0_train = read_train(kv, "h0_", cfg.h0_train);
  cfg.validate();
  return cfg;
}

DataPool::DataPool(const ExperimentConfig& cfg) : k_(cfg.k) {
  if (cfg.data_source == DataSource::GaussianMixture) {
    mixture_.emplace(cfg.k, cfg.d, derive_seed(cfg.seed, {0xc1a55}), cfg.mean_scale);
    return;
  }
  LabeledDataset all = load_idx(cfg.idx_images, cfg.idx_labels, cfg.k);
  // Random half/half split into a source pool and a target pool.
  std::vector<int> order(static_cast<std::size_t>(all.n()));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, {0x9001}));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
  const auto half = static_cast<std::ptrdiff_t>(order.size() / 2);
  source_pool_ = all.subset({order.begin(), order.begin() + half});
  target_pool_ = all.subset({order.begin() + half, order.end()});
  auto index = [this](const LabeledDataset& pool) {
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(k_));
    for (int i = 0; i < pool.n(); ++i) by_class[static_cast<std::size_t>(pool.labels[static_cast<std::size_t>(i)])].push_back(i);
    return by_class;
  };
  source_by_class_ = index(source_pool_);
  target_by_class_ = index(target_pool_);
}

LabeledDataset DataPool::draw(const LabeledDataset& pool, const std::vector<std::vector<int>>& by_class,
                              const LabelDist& dist, int n, std::uint64_t seed) const {
  const Labels ys = sample_labels(dist, n, derive_seed(seed, {0}));
  Rng rng(derive_seed(seed, {1}));
  std::vector<int> rows;
  rows.reserve(ys.size());
  for (int y : ys) {
    const auto& members = by_class[static_cast<std::size_t>(y)];
    if (members.empty()) throw Error(ErrorCode::UnsupportedClass, "pool has no sample of class " + std::to_string(y));
    rows.push_back(members[static_cast<std::size_t>(rng() % members.size())]);
  }
  return pool.subset(rows);
}

LabeledDataset DataPool::source_sample(const LabelDist& dist, int n, std::uint64_t seed) const {
  if (mixture_) return mixture_->sample(dist, n, seed);
  return draw(source_pool_, source_by_class_, dist, n, seed);
}

LabeledDataset DataPool::target_sample(const LabelDist& dist, int n, std::uint64_t seed) const {
  if (mixture_) return mixture_->sample(dist, n, seed);
  return draw(target_pool_, target_by_class_, dist, n, seed);
}

namespace {

ShiftSpec seeded(ShiftSpec spec, std::uint64_t seed) {
  spec.seed = seed;
  return spec;
}

TrainConfig seeded(TrainConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  return cfg;
}

// Child-seed roles within a trial.
enum SeedRole : std::uint64_t {
  kSourceShift = 1,
  kTargetShift,
  kH0Shift,
  kSourceSample,
  kTargetSample,
  kH0Sample,
  kH0Train,
  kFinalTrain,
  kSplit,
  kEvalSample,
};

}  // namespace

TrialData build_trial(const ExperimentConfig& cfg, const DataPool& pool, int trial) {
  const std::uint64_t s = derive_seed(cfg.seed, {static_cast<std::uint64_t>(trial)});
  LabelDist p = make_shift(seeded(cfg.source_shift, derive_seed(s, {kSourceShift})), cfg.k);
  LabelDist q = make_shift(seeded(cfg.target_shift, derive_seed(s, {kTargetShift})), cfg.k);
  Eigen::VectorXd w = importance_weights(q, p);
  LabeledDataset source = pool.source_sample(p, cfg.n_p, derive_seed(s, {kSourceSample}));
  LabeledDataset target = pool.target_sample(q, cfg.n_q, derive_seed(s, {kTargetSample}));
  std::optional<LabeledDataset> eval;
  if (cfg.n_eval > 0) eval = pool.target_sample(q, cfg.n_eval, derive_seed(s, {kEvalSample}));

  PipelineOptions opts;
  opts.beta = cfg.beta;
  opts.delta = cfg.delta;
  opts.solver = cfg.solver;
  opts.train = seeded(cfg.train, derive_seed(s, {kFinalTrain}));
  opts.h0_train = seeded(cfg.h0_train, derive_seed(s, {kH0Train}));
  opts.split_seed = derive_seed(s, {kSplit});

  std::optional<SoftmaxModel> h0;
  switch (cfg.h0_training) {
    case H0Training::ShiftedPool: {
      const LabelDist p_h0 = make_shift(seeded(cfg.h0_shift, derive_seed(s, {kH0Shift})), cfg.k);
      const int n_h0 = cfg.n_h0 > 0 ? cfg.n_h0 : cfg.n_p;
      const LabeledDataset h0_data = pool.source_sample(p_h0, n_h0, derive_seed(s, {kH0Sample}));
      h0 = train(h0_data, Eigen::VectorXd::Ones(cfg.k), opts.h0_train);
      break;
    }
    case H0Training::FullSource:
      h0 = train(source, Eigen::VectorXd::Ones(cfg.k), opts.h0_train);
      break;
    case H0Training::WeightSplit:
      break;
  }
  return TrialData{std::move(p), std::move(q), std::move(w), std::move(source), std::move(target), std::move(eval), std::move(h0),
                   opts};
}

namespace {

MetricsRecord failed_record(Method method, int trial, int slot, const std::string& why) {
  MetricsRecord r;
  r.method = method;
  r.trial = trial;
  r.lambda_slot = slot;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  r.weight_mse = r.accuracy = r.macro_f1 = r.lambda_used = r.sigma_min_observed = r.rho_selected = nan;
  r.error = why.empty() ? "unknown failure" : why;
  return r;
}

MetricsRecord evaluate(const TrialData& data, const WeightStage& stage, const WeightEstimate& est, int trial,
                       int slot) {
  MetricsRecord r;
  r.method = est.method;
  r.trial = trial;
  r.lambda_slot = slot;
  r.weights = est.weights;
  r.weight_mse = (est.weights - data.true_weights).squaredNorm();
  r.lambda_used = est.lambda;
  r.rho_selected = est.rho_selected;
  r.sigma_min_observed = stage.c_hat.sigma_min();
  const SoftmaxModel model = fit_weighted_classifier(stage, est, data.pipeline.train);
  const LabeledDataset& scored = data.eval ? *data.eval : data.target;
  const Labels preds = predict(model, scored.features);
  r.accuracy = accuracy(preds, scored.labels);
  r.macro_f1 = macro_f1(preds, scored.labels, scored.k);
  return r;
}

}  // namespace

std::vector<MetricsRecord> run_trial(const ExperimentConfig& cfg, const TrialData& data, int trial) {
  std::vector<MetricsRecord> out;
  const int rlls_slots = cfg.lambda_mode == LambdaMode::Fixed ? static_cast<int>(cfg.lambdas.size()) : 1;

  std::optional<WeightStage> stage;
  std::string stage_error;
  try {
    stage.emplace(prepare_weight_stage(data.source, data.h0, data.target.features, data.pipeline));
  } catch (const std::exception& e) {
    stage_error = e.what();
  }

  for (Method method : cfg.methods) {
    const int slots = method == Method::Rlls ? rlls_slots : 1;
    if (!stage) {
      for (int s = 0; s < slots; ++s) out.push_back(failed_record(method, trial, s, stage_error));
      continue;
    }
    if (method != Method::Rlls) {
      try {
        out.push_back(evaluate(data, *stage,
                               estimate_weights(method, *stage, 1.0, cfg.solver, &data.q, &data.p), trial, 0));
      } catch (const std::exception& e) {
        out.push_back(failed_record(method, trial, 0, e.what()));
      }
      continue;
    }

    std::optional<ThetaSelection> sel;
    std::string sel_error;
    try {
      sel.emplace(select_theta(*stage, cfg.solver));
    } catch (const std::exception& e) {
      sel_error = e.what();
    }
    for (int s = 0; s < slots; ++s) {
      if (!sel) {
        out.push_back(failed_record(method, trial, s, sel_error));
        continue;
      }
      try {
        double lambda = 0.0;
        if (cfg.lambda_mode == LambdaMode::Fixed) {
          lambda = cfg.lambdas[static_cast<std::size_t>(s)];
        } else if (stage->c_hat.sigma_min() > 0.0) {
          lambda = lambda_rule(stage->n_q, stage->n_p, cfg.theta_max, stage->c_hat.sigma_min(), cfg.continuous_lambda,
                               {cfg.beta, cfg.delta, cfg.k});
        }
        WeightEstimate est = regularized_weights(sel->theta_hat, lambda);
        est.rho_selected = sel->rho_selected;
        est.objective = sel->criterion;
        out.push_back(evaluate(data, *stage, est, trial, s));
      } catch (const std::exception& e) {
        out.push_back(failed_record(method, trial, s, e.what()));
      }
    }
  }
  return out;
}

std::vector<MetricsRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const DataPool pool(cfg);
  std::vector<MetricsRecord> all;
  for (int t = 0; t < cfg.trials; ++t) {
    std::vector<MetricsRecord> recs;
    try {
      recs = run_trial(cfg, build_trial(cfg, pool, t), t);
    } catch (const std::exception& e) {
      const int rlls_slots = cfg.lambda_mode == LambdaMode::Fixed ? static_cast<int>(cfg.lambdas.size()) : 1;
      for (Method m : cfg.methods) {
        for (int s = 0; s < (m == Method::Rlls ? rlls_slots : 1); ++s) recs.push_back(failed_record(m, t, s, e.what()));
      }
    }
    all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  auto method_pos = [&](Method m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) - cfg.methods.begin();
  };
  std::stable_sort(all.begin(), all.end(), [&](const MetricsRecord& a, const MetricsRecord& b) {
    return std::tuple(method_pos(a.method), a.lambda_slot, a.trial) <
           std::tuple(method_pos(b.method), b.lambda_slot, b.trial);
  });
  return all;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRecord>& records) {
  os << "method,lambda_slot,trial,weight_mse,accuracy,macro_f1,lambda_used,sigma_min_observed,rho_selected,error\n";
  for (const auto& r : records) {
    os << to_string(r.method) << ',' << r.lambda_slot << ',' << r.trial << ',' << format_double(r.weight_mse) << ','
       << format_double(r.accuracy) << ',' << format_double(r.macro_f1) << ',' << format_double(r.lambda_used) << ','
       << format_double(r.sigma_min_observed) << ',' << format_double(r.rho_selected) << ',';
    // Errors are free text; keep the row parseable.
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << err << '\n';
  }
}

void write_metrics_jsonl(std::ostream& os, const std::vector<MetricsRecord>& records) {
  auto num = [](double v) -> nlohmann::json { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  for (const auto& r : records) {
    nlohmann::json j;
    j["method"] = std::string(to_string(r.method));
    j["lambda_slot"] = r.lambda_slot;
    j["trial"] = r.trial;
    j["weight_mse"] = num(r.weight_mse);
    j["accuracy"] = num(r.accuracy);
    j["macro_f1"] = num(r.macro_f1);
    j["lambda_used"] = num(r.lambda_used);
    j["sigma_min_observed"] = num(r.sigma_min_observed);
    j["rho_selected"] = num(r.rho_selected);
    j["weights"] = std::vector<double>(r.weights.data(), r.weights.data() + r.weights.size());
    if (!r.ok()) j["error"] = r.error;
    os << j.dump() << '\n';
  }
}

std::vector<MetricsSummary> summarize(const std::vector<MetricsRecord>& records) {
  std::vector<std::pair<Method, int>> keys;
  std::map<std::pair<int, int>, std::vector<const MetricsRecord*>> groups;
  for (const auto& r : records) {
    const std::pair<int, int> key{static_cast<int>(r.method), r.lambda_slot};
    if (!groups.count(key)) keys.emplace_back(r.method, r.lambda_slot);
    groups[key].push_back(&r);
  }
  std::vector<MetricsSummary> out;
  for (const auto& [method, slot] : keys) {
    std::vector<double> mse, acc, f1, lam;
    for (const MetricsRecord* r : groups[{static_cast<int>(method), slot}]) {
      if (!r->ok()) continue;
      mse.push_back(r->weight_mse);
      acc.push_back(r->accuracy);
      f1.push_back(r->macro_f1);
      lam.push_back(r->lambda_used);
    }
    out.push_back({method, slot, mean(lam), static_cast<int>(mse.size()), median(mse), mean(mse), median(acc),
                   mean(acc), median(f1)});
  }
  return out;
}

void write_summary_csv(std::ostream& os, const std::vector<MetricsSummary>& summary) {
  os << "method,lambda_slot,mean_lambda,trials_ok,median_weight_mse,mean_weight_mse,median_accuracy,mean_accuracy,"
        "median_macro_f1\n";
  for (const auto& s : summary) {
    os << to_string(s.method) << ',' << s.lambda_slot << ',' << format_double(s.mean_lambda) << ',' << s.trials_ok
       << ',' << format_double(s.median_weight_mse) << ',' << format_double(s.mean_weight_mse) << ','
       << format_double(s.median_accuracy) << ',' << format_double(s.mean_accuracy) << ','
       << format_double(s.median_macro_f1) << '\n';
  }
}

}  // namespace lshift

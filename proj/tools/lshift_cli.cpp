// Command-line front end: weight estimation on files, batch experiments,
// streaming runs and the lambda threshold curve.

#include "lshift/bounds.hpp"
#include "lshift/error.hpp"
#include "lshift/harness.hpp"
#include "lshift/io.hpp"
#include "lshift/pipeline.hpp"
#include "lshift/random.hpp"
#include "lshift/streaming.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace lshift;

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  return os;
}

void reject_unused(const KeyValueConfig& kv) {
  const auto unused = kv.unused_keys();
  if (unused.empty()) return;
  std::string list;
  for (const auto& key : unused) list += (list.empty() ? "" : ", ") + key;
  throw Error(ErrorCode::InvalidConfig, "unknown config keys: " + list);
}

struct EstimateArgs {
  std::string source_csv;
  std::vector<std::string> source_idx;
  std::string target_csv;
  std::vector<std::string> target_idx;
  int k = 0;
  double beta = 0.5;
  double delta = 0.05;
  double delta_scale = 0.01;
  std::string method = "rlls";
  double lambda = -1.0;
  double theta_max = 5.0;
  std::uint64_t seed = 1;
  std::string out;
};

int estimate_weights_cmd(const EstimateArgs& a) {
  std::optional<int> k;
  if (a.k > 0) k = a.k;
  const LabeledDataset source =
      a.source_idx.empty() ? read_labeled_csv(a.source_csv, k) : load_idx(a.source_idx[0], a.source_idx[1], k);
  Eigen::MatrixXd target;
  if (!a.target_idx.empty()) {
    target = load_idx_images(a.target_idx[0]);
  } else {
    target = read_features_csv(a.target_csv);
  }

  PipelineOptions opts;
  opts.beta = a.beta;
  opts.delta = a.delta;
  opts.solver.delta_scale = a.delta_scale;
  opts.split_seed = derive_seed(a.seed, {1});
  opts.h0_train.seed = derive_seed(a.seed, {2});
  const WeightStage stage = prepare_weight_stage(source, std::nullopt, target, opts);

  const Method method = parse_method(a.method);
  if (method == Method::Oracle) throw Error(ErrorCode::InvalidParams, "oracle weights need the true distributions");
  double lambda = a.lambda;
  if (method == Method::Rlls && lambda < 0.0) {
    lambda = stage.c_hat.sigma_min() > 0.0
                 ? lambda_rule(stage.n_q, stage.n_p, a.theta_max, stage.c_hat.sigma_min(), false,
                               {a.beta, a.delta, source.k})
                 : 0.0;
  }
  const WeightEstimate est = estimate_weights(method, stage, lambda, opts.solver);
  const std::string json = to_json(est);
  if (a.out.empty()) {
    std::cout << json << '\n';
  } else {
    open_out(a.out) << json << '\n';
  }
  return 0;
}

struct ExperimentArgs {
  std::string config;
  std::string out;
  std::string jsonl;
  std::string summary;
};

int run_experiment_cmd(const ExperimentArgs& a) {
  const KeyValueConfig kv = KeyValueConfig::load(a.config);
  const ExperimentConfig cfg = ExperimentConfig::from_config(kv);
  reject_unused(kv);
  const auto records = run_experiment(cfg);
  if (a.out.empty()) {
    write_metrics_csv(std::cout, records);
  } else {
    auto os = open_out(a.out);
    write_metrics_csv(os, records);
  }
  if (!a.jsonl.empty()) {
    auto os = open_out(a.jsonl);
    write_metrics_jsonl(os, records);
  }
  const auto summary = summarize(records);
  if (!a.summary.empty()) {
    auto os = open_out(a.summary);
    write_summary_csv(os, summary);
  } else if (!a.out.empty()) {
    write_summary_csv(std::cout, summary);
  }
  return 0;
}

// Stream keys on top of the experiment keys. Synthetic by default: the source
// and the target stream come from trial 0 of the experiment config. With
// source_csv and target_csv the target file is read row by row.
int stream_cmd(const std::string& config, const std::string& out) {
  const KeyValueConfig kv = KeyValueConfig::load(config);
  StreamConfig sc;
  sc.recompute_every = kv.get_int("recompute_every", sc.recompute_every);
  sc.beta_grid = kv.get_doubles("beta_grid", sc.beta_grid);
  sc.lambda_grid = kv.get_doubles("lambda_grid", sc.lambda_grid);
  sc.complexity_term = kv.get_double("complexity_term", sc.complexity_term);
  const std::string source_csv = kv.get_string("source_csv", "");
  const std::string target_csv = kv.get_string("target_csv", "");
  const bool keep_h0 = kv.get_string("fixed_h0", "true") == "true";
  const ExperimentConfig ec = ExperimentConfig::from_config(kv);
  sc.theta_max = ec.theta_max;
  sc.delta = ec.delta;
  sc.horizon = kv.get_int("horizon", ec.n_q);
  reject_unused(kv);
  sc.validate();

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!out.empty()) {
    file = open_out(out);
    os = &file;
  }

  if (!source_csv.empty()) {
    if (target_csv.empty()) throw Error(ErrorCode::InvalidConfig, "source_csv needs target_csv");
    const LabeledDataset source = read_labeled_csv(source_csv, ec.k);
    std::ifstream target(target_csv);
    if (!target) throw Error(ErrorCode::Io, "cannot open '" + target_csv + "'");
    CsvFeatureStream stream(target);
    PipelineOptions opts;
    opts.solver = ec.solver;
    opts.train = ec.train;
    opts.h0_train = ec.h0_train;
    opts.train.seed = derive_seed(ec.seed, {8});
    opts.h0_train.seed = derive_seed(ec.seed, {7});
    opts.split_seed = derive_seed(ec.seed, {9});
    run_stream(source, stream, std::nullopt, sc, opts, std::nullopt, os);
    return 0;
  }

  const DataPool pool(ec);
  const TrialData data = build_trial(ec, pool, 0);
  MatrixStream stream(data.target.features);
  run_stream(data.source, stream, StreamEval{data.target.labels, data.true_weights}, sc, data.pipeline,
             keep_h0 ? data.h0 : std::nullopt, os);
  return 0;
}

int bound_curve_cmd(double n_p, double theta_max, double delta, int points, int k, double beta) {
  std::cout << "sigma_min,n_q_threshold,crude_bound_lambda0,crude_bound_lambda1\n";
  for (const auto& pt : threshold_curve(n_p, theta_max, points)) {
    BoundParams p;
    p.n_p = n_p;
    p.n_q = std::max(1.0, pt.n_q_threshold);
    p.beta = beta;
    p.delta = delta;
    p.k = k;
    p.theta_max = theta_max;
    p.sigma_min = pt.sigma_min;
    p.d_inf = p.d = 1.0 + theta_max;
    p.lambda = 0.0;
    const double b0 = crude_bound(p);
    p.lambda = 1.0;
    const double b1 = crude_bound(p);
    std::cout << format_double(pt.sigma_min) << ',' << format_double(pt.n_q_threshold) << ',' << format_double(b0)
              << ',' << format_double(b1) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-shift weight estimation and weighted training"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate-weights", "Estimate importance weights from files");
  auto* src_opt = est_cmd->add_option("--source", est.source_csv, "Labeled source CSV (label,f1,...)");
  auto* src_idx = est_cmd->add_option("--source-idx", est.source_idx, "Source IDX images and labels")->expected(2);
  src_opt->excludes(src_idx);
  auto* tgt_opt = est_cmd->add_option("--target", est.target_csv, "Target feature CSV (f1,...)");
  auto* tgt_idx = est_cmd->add_option("--target-idx", est.target_idx, "Target IDX images")->expected(1);
  tgt_opt->excludes(tgt_idx);
  est_cmd->add_option("--k", est.k, "Number of classes (default: max source label + 1)");
  est_cmd->add_option("--beta", est.beta, "Fraction of the source used to train the classifier");
  est_cmd->add_option("--delta", est.delta, "Failure probability");
  est_cmd->add_option("--delta-scale", est.delta_scale, "Multiplier on the confusion radius in the rho grid");
  est_cmd->add_option("--method", est.method, "rlls, bbsl or unweighted");
  est_cmd->add_option("--lambda", est.lambda, "RLLS shrinkage; default picks it by the threshold rule");
  est_cmd->add_option("--theta-max", est.theta_max, "Prior bound on ||w - 1||");
  est_cmd->add_option("--seed", est.seed, "Seed for the split and the black box");
  est_cmd->add_option("--out", est.out, "Write the JSON here instead of stdout");

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("run-experiment", "Run a multi-trial batch experiment");
  exp_cmd->add_option("--config", exp.config, "key = value config file")->required();
  exp_cmd->add_option("--out", exp.out, "Per-trial metrics CSV (default stdout)");
  exp_cmd->add_option("--jsonl", exp.jsonl, "Per-trial metrics as JSON lines");
  exp_cmd->add_option("--summary", exp.summary, "Per-method summary CSV");

  std::string stream_config, stream_out;
  auto* stream_sub = app.add_subcommand("stream", "Run the streaming adaptation loop");
  stream_sub->add_option("--config", stream_config, "key = value config file")->required();
  stream_sub->add_option("--out", stream_out, "Stream records CSV (default stdout)");

  double n_p = 10000, theta_max = 5.0, delta = 0.05, beta = 0.5;
  int points = 50, k = 10;
  auto* curve = app.add_subcommand("bound-curve", "Target-sample threshold at which lambda switches to 1");
  curve->add_option("--np", n_p, "Source sample count")->required();
  curve->add_option("--theta-max", theta_max, "Prior bound on ||w - 1||")->required();
  curve->add_option("--delta", delta, "Failure probability");
  curve->add_option("--points", points, "Curve points");
  curve->add_option("--k", k, "Number of classes for the bound columns");
  curve->add_option("--beta", beta, "Split ratio for the bound columns");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*est_cmd) {
      if (est.source_csv.empty() && est.source_idx.empty()) throw Error(ErrorCode::InvalidConfig, "need a source");
      if (est.target_csv.empty() && est.target_idx.empty()) throw Error(ErrorCode::InvalidConfig, "need a target");
      return estimate_weights_cmd(est);
    }
    if (*exp_cmd) return run_experiment_cmd(exp);
    if (*stream_sub) return stream_cmd(stream_config, stream_out);
    if (*curve) return bound_curve_cmd(n_p, theta_max, delta, points, k, beta);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

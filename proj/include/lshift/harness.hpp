#pragma once

// Experiment orchestration: synthetic Gaussian-mixture data, metrics, the
// multi-trial batch protocol and its CSV / JSON-lines output.

#include "lshift/bounds.hpp"
#include "lshift/distrib.hpp"
#include "lshift/erm.hpp"
#include "lshift/estimator.hpp"
#include "lshift/io.hpp"
#include "lshift/pipeline.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lshift {

/// Class-conditional Gaussians N(mean_y, I) with means drawn once from
/// N(0, mean_scale^2 I) by the construction seed. Every sample() call shares
/// those conditionals, so datasets drawn with different label distributions
/// differ only by label shift.
class GaussianMixture {
 public:
  GaussianMixture(int k, int d, std::uint64_t seed, double mean_scale = 1.0);

  [[nodiscard]] int k() const noexcept { return static_cast<int>(means_.rows()); }
  [[nodiscard]] int d() const noexcept { return static_cast<int>(means_.cols()); }
  [[nodiscard]] const Eigen::MatrixXd& means() const noexcept { return means_; }

  [[nodiscard]] LabeledDataset sample(const LabelDist& dist, int n, std::uint64_t seed) const;
  [[nodiscard]] LabeledDataset sample_labels_given(const Labels& labels, std::uint64_t seed) const;
  [[nodiscard]] GaussianConditionals conditionals() const { return GaussianConditionals(means_, 1.0); }

 private:
  Eigen::MatrixXd means_;
};

/// Means from `seed`; the sample itself from a seed derived from it.
LabeledDataset gen_gaussian_mixture(int k, int d, const LabelDist& label_dist, int n, std::uint64_t seed,
                                    double mean_scale = 1.0);

double accuracy(const Labels& preds, const Labels& labels);

/// Mean over all k classes of per-class F1; a class with precision + recall = 0
/// contributes 0.
double macro_f1(const Labels& preds, const Labels& labels, int k);

double median(std::vector<double> values);
double mean(const std::vector<double>& values);

enum class DataSource { GaussianMixture, IdxFiles };
enum class LambdaMode { Rule, Fixed };
/// Where the black box is fit: a separate pool drawn with h0_shift, the
/// weight split of the source, or the whole source.
enum class H0Training { ShiftedPool, WeightSplit, FullSource };

struct ExperimentConfig {
  int k = 10;
  int d = 10;
  int n_p = 10000;
  int n_q = 10000;
  int n_h0 = 0;    // 0 means n_p
  int n_eval = 0;  // held-out target set for accuracy; 0 scores on the target sample itself
  double beta = 0.5;
  ShiftSpec source_shift;
  ShiftSpec target_shift;
  ShiftSpec h0_shift;
  std::vector<Method> methods{Method::Rlls, Method::Bbsl, Method::Oracle, Method::Unweighted};
  int trials = 20;
  std::uint64_t seed = 1;
  double delta = 0.05;
  double theta_max = 5.0;
  LambdaMode lambda_mode = LambdaMode::Fixed;
  bool continuous_lambda = false;
  std::vector<double> lambdas{1.0};
  DataSource data_source = DataSource::GaussianMixture;
  std::filesystem::path idx_images;
  std::filesystem::path idx_labels;
  double mean_scale = 1.0;
  H0Training h0_training = H0Training::ShiftedPool;
  SolverOptions solver = SolverOptions::experiment_preset();
  TrainConfig train;
  TrainConfig h0_train;

  void validate() const;
  /// Named presets: tweak_one, minority_class, dirichlet_target, low_sample.
  static ExperimentConfig preset(const std::string& name);
  /// Starts from `preset = <name>` when given, then applies the remaining keys.
  static ExperimentConfig from_config(const KeyValueConfig& kv);
};

struct MetricsRecord {
  Method method = Method::Unweighted;
  int trial = 0;
  double weight_mse = 0.0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double lambda_used = 0.0;
  double sigma_min_observed = 0.0;
  double rho_selected = 0.0;
  int lambda_slot = 0;  // index into the fixed lambda list; 0 in rule mode
  Eigen::VectorXd weights;
  std::string error;  // non-empty when the trial failed for this method

  [[nodiscard]] bool ok() const noexcept { return error.empty(); }
};

/// Feature pools that trials draw from.
class DataPool {
 public:
  explicit DataPool(const ExperimentConfig& cfg);

  [[nodiscard]] LabeledDataset source_sample(const LabelDist& dist, int n, std::uint64_t seed) const;
  [[nodiscard]] LabeledDataset target_sample(const LabelDist& dist, int n, std::uint64_t seed) const;
  [[nodiscard]] int k() const noexcept { return k_; }

 private:
  int k_;
  std::optional<GaussianMixture> mixture_;
  // IDX pools, indexed by class.
  LabeledDataset source_pool_;
  LabeledDataset target_pool_;
  std::vector<std::vector<int>> source_by_class_;
  std::vector<std::vector<int>> target_by_class_;

  [[nodiscard]] LabeledDataset draw(const LabeledDataset& pool, const std::vector<std::vector<int>>& by_class,
                                    const LabelDist& dist, int n, std::uint64_t seed) const;
};

/// Materialized inputs of one trial.
struct TrialData {
  LabelDist p;
  LabelDist q;
  Eigen::VectorXd true_weights;
  LabeledDataset source;
  LabeledDataset target;
  std::optional<LabeledDataset> eval;  // held-out target set, when configured
  std::optional<SoftmaxModel> h0;  // unset when h0 is fit on the weight split
  PipelineOptions pipeline;
};

TrialData build_trial(const ExperimentConfig& cfg, const DataPool& pool, int trial);

/// Metrics for one trial and every configured method (and lambda, in fixed mode).
std::vector<MetricsRecord> run_trial(const ExperimentConfig& cfg, const TrialData& data, int trial);

/// All trials; ordered by (method, lambda, trial); deterministic per seed.
std::vector<MetricsRecord> run_experiment(const ExperimentConfig& cfg);

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRecord>& records);
void write_metrics_jsonl(std::ostream& os, const std::vector<MetricsRecord>& records);

struct MetricsSummary {
  Method method;
  int lambda_slot;
  double mean_lambda;
  int trials_ok;
  double median_weight_mse;
  double mean_weight_mse;
  double median_accuracy;
  double mean_accuracy;
  double median_macro_f1;
};

std::vector<MetricsSummary> summarize(const std::vector<MetricsRecord>& records);
void write_summary_csv(std::ostream& os, const std::vector<MetricsSummary>& summary);

}  // namespace lshift

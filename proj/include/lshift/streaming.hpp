#pragma once

// Streaming adaptation: target features arrive over time; at each recompute
// point the split ratio beta and the shrinkage lambda are picked by minimizing
// the streaming bound over finite grids, the weights are re-estimated from all
// target features seen so far and the weighted classifier is retrained.

#include "lshift/erm.hpp"
#include "lshift/pipeline.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lshift {

struct StreamConfig {
  long recompute_every = 100;
  std::vector<double> beta_grid{0.5};
  std::vector<double> lambda_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  double theta_max = 5.0;
  double delta = 0.05;
  long horizon = 10000;
  /// Stand-in for the hypothesis-class complexity term of the bound.
  double complexity_term = 0.0;

  void validate() const;
};

struct HyperChoice {
  double beta = 0.0;
  double lambda = 0.0;
  double bound_value = 0.0;
};

/// Bound for one (beta, lambda) pair at step t: theta_max in place of
/// ||theta||, d = d_inf = 1 + theta_max, n_q = t and delta split over
/// t |beta_grid| |lambda_grid| events. sigma_min_est <= 0 makes every
/// lambda > 0 infinitely bad.
double stream_objective(long t, double n_p, const StreamConfig& cfg, double beta, double lambda,
                        double sigma_min_est, int k);

/// Grid minimizer of stream_objective; ties go to smaller lambda, then larger beta.
HyperChoice select_hyperparams(long t, double n_p, const StreamConfig& cfg, double sigma_min_est, int k);

struct StreamRecord {
  long t = 0;
  double lambda_star = 0.0;
  double beta_star = 0.0;
  double bound_value = 0.0;
  double target_accuracy = 0.0;  // on the first t target samples; NaN without labels
  double weight_mse = 0.0;       // NaN without true weights
  double sigma_min = 0.0;        // of C_hat at this step; NaN if the step failed
  Eigen::VectorXd weights;
  std::string error;  // non-empty if the step failed and the previous classifier was kept
};

class FeatureStream {
 public:
  virtual ~FeatureStream() = default;
  /// Next feature row, or nullopt at the end of the stream.
  virtual std::optional<Eigen::VectorXd> next() = 0;
};

class MatrixStream final : public FeatureStream {
 public:
  explicit MatrixStream(Eigen::MatrixXd rows) : rows_(std::move(rows)) {}
  std::optional<Eigen::VectorXd> next() override;

 private:
  Eigen::MatrixXd rows_;
  Eigen::Index pos_ = 0;
};

/// Reads one comma-separated feature row per line, on demand. Blank lines are
/// skipped.
class CsvFeatureStream final : public FeatureStream {
 public:
  explicit CsvFeatureStream(std::istream& is) : is_(is) {}
  std::optional<Eigen::VectorXd> next() override;

 private:
  std::istream& is_;
  Eigen::Index width_ = -1;
  long line_no_ = 0;
};

/// Labels and true weights used only to score each step.
struct StreamEval {
  Labels target_labels;
  std::optional<Eigen::VectorXd> true_weights;
};

/// `pipeline` supplies delta_scale, training configs and seeds; its beta and
/// delta are replaced by beta* and cfg.delta at each step. With a supplied h0
/// the black box stays fixed, otherwise it is refit on every weight split.
/// Rows are appended to `csv` as they are produced, when given.
std::vector<StreamRecord> run_stream(const LabeledDataset& source, FeatureStream& stream,
                                     const std::optional<StreamEval>& eval, const StreamConfig& cfg,
                                     const PipelineOptions& pipeline, const std::optional<SoftmaxModel>& h0 = {},
                                     std::ostream* csv = nullptr);

void write_stream_csv_header(std::ostream& os);
void write_stream_csv_row(std::ostream& os, const StreamRecord& r);

}  // namespace lshift

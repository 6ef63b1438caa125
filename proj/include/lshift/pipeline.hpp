#pragma once

// One pass of label-shift correction on a labeled source set and unlabeled
// target features: split the source, get a black-box predictor, estimate the
// confusion matrix and target predicted marginal, estimate weights and train
// the weighted classifier. Shared by the batch experiment harness and the
// streaming loop so both produce identical numbers for identical inputs.

#include "lshift/confusion.hpp"
#include "lshift/erm.hpp"
#include "lshift/estimator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>

namespace lshift {

struct PipelineOptions {
  double beta = 0.5;
  double delta = 0.05;
  SolverOptions solver = SolverOptions::experiment_preset();
  TrainConfig train;     // final classifier
  TrainConfig h0_train;  // black box, when it has to be fit on the weight split
  std::uint64_t split_seed = 0;
};

/// Everything the weight estimators need. Built from target features only.
struct WeightStage {
  SourceSplit split;
  SoftmaxModel h0;
  ConfusionEstimate c_hat;
  LabelDist q_hat;
  Eigen::VectorXd b_hat;
  Deltas deltas;
  double n_p = 0.0;  // full source size
  double n_q = 0.0;
};

/// A supplied h0 is used as a fixed black box; otherwise one is trained on the
/// weight split with opts.h0_train.
WeightStage prepare_weight_stage(const LabeledDataset& source, const std::optional<SoftmaxModel>& h0,
                                 const Eigen::MatrixXd& target_features, const PipelineOptions& opts);

/// Weight estimate for one method. lambda applies to Method::Rlls only.
/// `true_q`/`true_p` are required for Method::Oracle and ignored otherwise.
WeightEstimate estimate_weights(Method method, const WeightStage& stage, double lambda, const SolverOptions& solver,
                                const LabelDist* true_q = nullptr, const LabelDist* true_p = nullptr);

/// The regularized theta selection on the stage's C_hat and b_hat.
ThetaSelection select_theta(const WeightStage& stage, const SolverOptions& solver);

/// Final classifier trained on the class split with the estimated weights.
SoftmaxModel fit_weighted_classifier(const WeightStage& stage, const WeightEstimate& est, const TrainConfig& cfg);

}  // namespace lshift

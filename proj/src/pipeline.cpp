#include "lshift/pipeline.hpp"

#include "lshift/error.hpp"

namespace lshift {

WeightStage prepare_weight_stage(const LabeledDataset& source, const std::optional<SoftmaxModel>& h0,
                                 const Eigen::MatrixXd& target_features, const PipelineOptions& opts) {
  if (target_features.rows() < 1) throw Error(ErrorCode::EmptyInput, "no target samples");
  SourceSplit split = split_source(source, opts.beta, opts.split_seed);
  if (split.weight_set.n() < 1 || split.class_set.n() < 1) {
    throw Error(ErrorCode::InvalidBeta, "beta leaves an empty source split");
  }
  SoftmaxModel black_box = h0 ? *h0 : train(split.weight_set, Eigen::VectorXd::Ones(source.k), opts.h0_train);
  ConfusionEstimate c_hat = estimate_confusion(predict(black_box, split.weight_set.features),
                                               split.weight_set.labels, source.k);
  LabelDist q_hat = estimate_label_dist(predict(black_box, target_features), source.k);
  Eigen::VectorXd b_hat = build_b(q_hat, c_hat);
  const double n_weight = split.weight_set.n();
  const double n_q = static_cast<double>(target_features.rows());
  Deltas deltas = Deltas::compute(source.k, n_weight, n_q, opts.delta);
  return WeightStage{std::move(split), std::move(black_box), std::move(c_hat), std::move(q_hat),
                     std::move(b_hat), deltas, static_cast<double>(source.n()), n_q};
}

ThetaSelection select_theta(const WeightStage& stage, const SolverOptions& solver) {
  return select_theta(stage.c_hat, stage.b_hat, stage.deltas, solver);
}

WeightEstimate estimate_weights(Method method, const WeightStage& stage, double lambda, const SolverOptions& solver,
                                const LabelDist* true_q, const LabelDist* true_p) {
  switch (method) {
    case Method::Rlls: {
      const ThetaSelection sel = select_theta(stage, solver);
      WeightEstimate est = regularized_weights(sel.theta_hat, lambda);
      est.rho_selected = sel.rho_selected;
      est.objective = sel.criterion;
      return est;
    }
    case Method::Bbsl:
      return bbsl_weights(stage.c_hat, stage.q_hat);
    case Method::Oracle:
      if (true_q == nullptr || true_p == nullptr) {
        throw Error(ErrorCode::InvalidParams, "oracle weights need the true label distributions");
      }
      return oracle_weights(*true_q, *true_p);
    case Method::Unweighted:
      return unweighted(stage.c_hat.k());
  }
  return unweighted(stage.c_hat.k());
}

SoftmaxModel fit_weighted_classifier(const WeightStage& stage, const WeightEstimate& est, const TrainConfig& cfg) {
  return train(stage.split.class_set, est.weights, cfg);
}

}  // namespace lshift

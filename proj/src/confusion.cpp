#include "lshift/confusion.hpp"

#include "lshift/error.hpp"
#include "lshift/io.hpp"

#include <cmath>
#include <numbers>

namespace lshift {

ConfusionEstimate::ConfusionEstimate(Eigen::MatrixXd matrix, long n_samples)
    : matrix_(std::move(matrix)), n_samples_(n_samples) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 2) {
    throw Error(ErrorCode::DimensionMismatch, "confusion matrix must be square with k >= 2");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix_);
  const auto& s = svd.singularValues();
  sigma_max_ = s(0);
  sigma_min_ = s(s.size() - 1);
}

namespace {

void check_labels(const Labels& v, int k, const char* what) {
  for (int y : v) {
    if (y < 0 || y >= k) {
      throw Error(ErrorCode::DimensionMismatch, std::string(what) + " entry outside [0, k)");
    }
  }
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidDelta, "delta must lie in (0, 1)");
}

}  // namespace

ConfusionEstimate estimate_confusion(const Labels& preds, const Labels& labels, int k) {
  if (preds.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "preds and labels differ in length");
  if (preds.empty()) throw Error(ErrorCode::EmptyInput, "no samples");
  check_labels(preds, k, "prediction");
  check_labels(labels, k, "label");
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t t = 0; t < preds.size(); ++t) counts(preds[t], labels[t]) += 1.0;
  const auto n = static_cast<long>(preds.size());
  return ConfusionEstimate(counts / static_cast<double>(n), n);
}

LabelDist estimate_label_dist(const Labels& preds, int k) {
  if (preds.empty()) throw Error(ErrorCode::EmptyInput, "no predictions");
  check_labels(preds, k, "prediction");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  for (int y : preds) counts(y) += 1.0;
  return LabelDist::from_counts(counts);
}

Eigen::VectorXd build_b(const LabelDist& q_hat, const ConfusionEstimate& c_hat) {
  if (q_hat.size() != c_hat.k()) throw Error(ErrorCode::DimensionMismatch, "q_hat and C_hat differ in k");
  return q_hat.probs() - c_hat.predicted_marginal();
}

double delta_C(int k, double n_weight, double delta) {
  check_delta(delta);
  if (k < 2 || !(n_weight >= 1.0)) throw Error(ErrorCode::InvalidParams, "delta_C requires k >= 2, n >= 1");
  const double l = std::log(2.0 * k / delta);
  return 2.0 * l / (3.0 * n_weight) + std::sqrt(2.0 * l / n_weight);
}

double delta_b(double n_weight, double n_target, double delta) {
  check_delta(delta);
  if (!(n_weight >= 1.0 && n_target >= 1.0)) throw Error(ErrorCode::InvalidParams, "delta_b requires n >= 1");
  const double l = std::log(1.0 / delta);
  return 2.0 / std::sqrt(std::numbers::ln2) * (std::sqrt(l / n_weight) + std::sqrt(l / n_target));
}

double delta_q(double n_target, double delta) {
  check_delta(delta);
  if (!(n_target >= 1.0)) throw Error(ErrorCode::InvalidParams, "delta_q requires n >= 1");
  return 1.0 / std::sqrt(n_target) + std::sqrt(std::log(1.0 / delta) / n_target);
}

double delta_p(double n_weight, double delta) { return delta_q(n_weight, delta); }

Deltas Deltas::compute(int k, double n_weight, double n_target, double delta) {
  Deltas d;
  d.delta_C = lshift::delta_C(k, n_weight, delta);
  d.delta_b = lshift::delta_b(n_weight, n_target, delta);
  d.delta_q = lshift::delta_q(n_target, delta);
  d.delta_p = lshift::delta_p(n_weight, delta);
  d.delta = delta;
  d.n_weight = n_weight;
  d.n_target = n_target;
  return d;
}

std::string to_csv(const ConfusionEstimate& c) {
  std::string out;
  for (int i = 0; i < c.k(); ++i) {
    for (int j = 0; j < c.k(); ++j) {
      if (j) out += ',';
      out += format_double(c.matrix()(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace lshift

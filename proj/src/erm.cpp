#include "lshift/erm.hpp"

#include "lshift/error.hpp"
#include "lshift/io.hpp"
#include "lshift/random.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

namespace lshift {

void LabeledDataset::validate() const {
  if (features.rows() < 1) throw Error(ErrorCode::EmptyInput, "dataset has no rows");
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw Error(ErrorCode::LengthMismatch, "labels and features differ in length");
  }
  if (k < 2) throw Error(ErrorCode::InvalidParams, "dataset needs k >= 2");
  for (int y : labels) {
    if (y < 0 || y >= k) throw Error(ErrorCode::DimensionMismatch, "label outside [0, k)");
  }
  if (!features.allFinite()) throw Error(ErrorCode::InvalidParams, "non-finite feature");
}

LabeledDataset LabeledDataset::subset(const std::vector<int>& rows) const {
  LabeledDataset out;
  out.k = k;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
    out.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

SoftmaxModel SoftmaxModel::zeros(int k, int d) {
  SoftmaxModel m;
  m.weights = Eigen::MatrixXd::Zero(k, d);
  m.bias = Eigen::VectorXd::Zero(k);
  return m;
}

Eigen::MatrixXd SoftmaxModel::logits(const Eigen::MatrixXd& features) const {
  if (features.cols() != weights.cols()) throw Error(ErrorCode::DimensionMismatch, "feature width != model d");
  Eigen::MatrixXd z = features * weights.transpose();
  z.rowwise() += bias.transpose();
  return z;
}

namespace {

void softmax_rows(Eigen::MatrixXd& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double top = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - top).exp();
    z.row(i) /= z.row(i).sum();
  }
}

// -log softmax(z)_y, computed with the log-sum-exp shift.
double cross_entropy(const Eigen::Ref<const Eigen::RowVectorXd>& z, int y) {
  const double top = z.maxCoeff();
  return std::log((z.array() - top).exp().sum()) + top - z(y);
}

void check_weights(const Eigen::VectorXd& weights, int k) {
  if (weights.size() != k) throw Error(ErrorCode::DimensionMismatch, "class weights must have length k");
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw Error(ErrorCode::InvalidParams, "class weights must be finite and >= 0");
  }
}

}  // namespace

Eigen::MatrixXd SoftmaxModel::probabilities(const Eigen::MatrixXd& features) const {
  Eigen::MatrixXd z = logits(features);
  softmax_rows(z);
  return z;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidParams, "learning_rate must be > 0");
  if (epochs < 1) throw Error(ErrorCode::InvalidParams, "epochs must be >= 1");
  if (!(l2_penalty >= 0.0)) throw Error(ErrorCode::InvalidParams, "l2_penalty must be >= 0");
}

double weighted_loss(const SoftmaxModel& model, const LabeledDataset& data, const Eigen::VectorXd& weights,
                     LossKind kind, double ce_cap) {
  check_weights(weights, model.k());
  if (data.k != model.k()) throw Error(ErrorCode::DimensionMismatch, "dataset k != model k");
  const Eigen::MatrixXd z = model.logits(data.features);
  const Labels pred = kind == LossKind::ZeroOne ? predict(model, data.features) : Labels{};
  double total = 0.0;
  for (int j = 0; j < data.n(); ++j) {
    const int y = data.labels[static_cast<std::size_t>(j)];
    const double loss = kind == LossKind::ZeroOne ? (pred[static_cast<std::size_t>(j)] != y ? 1.0 : 0.0)
                                                   : std::clamp(cross_entropy(z.row(j), y), 0.0, ce_cap);
    total += weights(y) * loss;
  }
  return total / data.n();
}

ObjectiveGradient weighted_objective(const SoftmaxModel& model, const LabeledDataset& data,
                                     const Eigen::VectorXd& weights, double l2_penalty) {
  check_weights(weights, model.k());
  const int n = data.n();
  Eigen::MatrixXd z = model.logits(data.features);
  double value = 0.0;
  for (int j = 0; j < n; ++j) {
    const int y = data.labels[static_cast<std::size_t>(j)];
    value += weights(y) * cross_entropy(z.row(j), y);
  }
  softmax_rows(z);
  // z now holds P; turn it into the per-row residual w_y (P - onehot(y)) / n.
  for (int j = 0; j < n; ++j) {
    const int y = data.labels[static_cast<std::size_t>(j)];
    z(j, y) -= 1.0;
    z.row(j) *= weights(y) / n;
  }
  ObjectiveGradient g;
  g.value = value / n + 0.5 * l2_penalty * model.weights.squaredNorm();
  g.grad_weights = z.transpose() * data.features + l2_penalty * model.weights;
  g.grad_bias = z.colwise().sum().transpose();
  return g;
}

SoftmaxModel train(const LabeledDataset& data, const Eigen::VectorXd& weights, const TrainConfig& cfg) {
  data.validate();
  cfg.validate();
  check_weights(weights, data.k);

  SoftmaxModel model = SoftmaxModel::zeros(data.k, data.d());
  Rng rng(cfg.seed);
  std::normal_distribution<double> init(0.0, 1e-3);
  for (Eigen::Index i = 0; i < model.weights.size(); ++i) model.weights.data()[i] = init(rng);

  model.train_log.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const ObjectiveGradient g = weighted_objective(model, data, weights, cfg.l2_penalty);
    if (!std::isfinite(g.value)) throw Error(ErrorCode::Divergence, "training loss became non-finite");
    model.train_log.push_back(g.value);
    model.weights -= cfg.learning_rate * g.grad_weights;
    model.bias -= cfg.learning_rate * g.grad_bias;
  }
  if (!model.weights.allFinite() || !model.bias.allFinite()) {
    throw Error(ErrorCode::Divergence, "parameters became non-finite");
  }
  return model;
}

Labels predict(const SoftmaxModel& model, const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd z = model.logits(features);
  Labels out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < z.cols(); ++c) {
      if (z(i, c) > z(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

SourceSplit split_source(const LabeledDataset& data, double beta, std::uint64_t seed) {
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorCode::InvalidBeta, "beta must lie in (0, 1)");
  data.validate();
  std::vector<int> order(static_cast<std::size_t>(data.n()));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  const auto n_class = static_cast<std::size_t>(std::lround(beta * data.n()));
  SourceSplit split;
  split.class_set = data.subset({order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_class)});
  split.weight_set = data.subset({order.begin() + static_cast<std::ptrdiff_t>(n_class), order.end()});
  return split;
}

void write_model_csv(std::ostream& os, const SoftmaxModel& model) {
  os << model.k() << ',' << model.d() << '\n';
  for (int c = 0; c < model.k(); ++c) {
    for (int j = 0; j < model.d(); ++j) os << format_double(model.weights(c, j)) << ',';
    os << format_double(model.bias(c)) << '\n';
  }
}

SoftmaxModel read_model_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::TruncatedFile, "missing model header");
  auto header = split_csv_line(line);
  if (header.size() != 2) throw Error(ErrorCode::InvalidConfig, "model header must be 'k,d'");
  const int k = std::stoi(header[0]);
  const int d = std::stoi(header[1]);
  SoftmaxModel m = SoftmaxModel::zeros(k, d);
  for (int c = 0; c < k; ++c) {
    if (!std::getline(is, line)) throw Error(ErrorCode::TruncatedFile, "missing model row");
    auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != d + 1) throw Error(ErrorCode::DimensionMismatch, "model row width");
    for (int j = 0; j < d; ++j) m.weights(c, j) = parse_double(cells[static_cast<std::size_t>(j)]);
    m.bias(c) = parse_double(cells[static_cast<std::size_t>(d)]);
  }
  return m;
}

}  // namespace lshift

#include "lshift/streaming.hpp"

#include "lshift/bounds.hpp"
#include "lshift/error.hpp"
#include "lshift/harness.hpp"
#include "lshift/io.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

namespace lshift {

void StreamConfig::validate() const {
  if (recompute_every < 1) throw Error(ErrorCode::InvalidConfig, "recompute_every must be >= 1");
  if (horizon < 1) throw Error(ErrorCode::InvalidConfig, "horizon must be >= 1");
  if (beta_grid.empty() || lambda_grid.empty()) throw Error(ErrorCode::InvalidConfig, "grids must be non-empty");
  for (double b : beta_grid) {
    if (!(b > 0.0 && b < 1.0)) throw Error(ErrorCode::InvalidBeta, "beta_grid entries must lie in (0, 1)");
  }
  for (double l : lambda_grid) {
    if (!(l >= 0.0 && l <= 1.0)) throw Error(ErrorCode::InvalidConfig, "lambda_grid entries must lie in [0, 1]");
  }
  if (!(delta > 0.0 && delta <= 0.5)) throw Error(ErrorCode::InvalidDelta, "delta must lie in (0, 0.5]");
  if (!(theta_max > 0.0)) throw Error(ErrorCode::InvalidConfig, "theta_max must be > 0");
  if (!(complexity_term >= 0.0)) throw Error(ErrorCode::InvalidConfig, "complexity_term must be >= 0");
}

double stream_objective(long t, double n_p, const StreamConfig& cfg, double beta, double lambda,
                        double sigma_min_est, int k) {
  const bool sigma_ok = sigma_min_est > 0.0 && std::isfinite(sigma_min_est);
  if (!sigma_ok && lambda > 0.0) return std::numeric_limits<double>::infinity();
  BoundParams p;
  p.n_p = n_p;
  p.beta = beta;
  p.lambda = lambda;
  p.delta = cfg.delta / static_cast<double>(cfg.beta_grid.size() * cfg.lambda_grid.size());
  p.k = k;
  p.theta_norm = cfg.theta_max;
  p.theta_max = cfg.theta_max;
  // Only multiplied by lambda == 0 when sigma is unusable.
  p.sigma_min = sigma_ok ? sigma_min_est : 1.0;
  p.d_inf = 1.0 + cfg.theta_max;
  p.d = p.d_inf;
  p.complexity_term = cfg.complexity_term;
  return streaming_bound(p, t);
}

HyperChoice select_hyperparams(long t, double n_p, const StreamConfig& cfg, double sigma_min_est, int k) {
  if (t < 1) throw Error(ErrorCode::InvalidParams, "t must be >= 1");
  HyperChoice best{0.0, 0.0, std::numeric_limits<double>::infinity()};
  bool have = false;
  for (double beta : cfg.beta_grid) {
    for (double lambda : cfg.lambda_grid) {
      const double v = stream_objective(t, n_p, cfg, beta, lambda, sigma_min_est, k);
      const bool better = !have || v < best.bound_value ||
                          (v == best.bound_value &&
                           (lambda < best.lambda || (lambda == best.lambda && beta > best.beta)));
      if (better) {
        best = {beta, lambda, v};
        have = true;
      }
    }
  }
  return best;
}

std::optional<Eigen::VectorXd> MatrixStream::next() {
  if (pos_ >= rows_.rows()) return std::nullopt;
  return Eigen::VectorXd(rows_.row(pos_++).transpose());
}

std::optional<Eigen::VectorXd> CsvFeatureStream::next() {
  std::string line;
  while (std::getline(is_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (width_ < 0) width_ = static_cast<Eigen::Index>(cells.size());
    if (static_cast<Eigen::Index>(cells.size()) != width_) {
      throw Error(ErrorCode::DimensionMismatch, "feature stream line " + std::to_string(line_no_) + " has " +
                                                    std::to_string(cells.size()) + " columns, expected " +
                                                    std::to_string(width_));
    }
    Eigen::VectorXd x(width_);
    for (Eigen::Index j = 0; j < width_; ++j) x(j) = parse_double(cells[static_cast<std::size_t>(j)]);
    return x;
  }
  return std::nullopt;
}

namespace {

struct StepState {
  std::optional<SoftmaxModel> model;
  Eigen::VectorXd weights;
  double sigma_min = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace

std::vector<StreamRecord> run_stream(const LabeledDataset& source, FeatureStream& stream,
                                     const std::optional<StreamEval>& eval, const StreamConfig& cfg,
                                     const PipelineOptions& pipeline, const std::optional<SoftmaxModel>& h0,
                                     std::ostream* csv) {
  cfg.validate();
  source.validate();
  const int k = source.k;
  const double n_p = source.n();
  const bool single_choice = cfg.beta_grid.size() == 1 && cfg.lambda_grid.size() == 1;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  // Append-only buffer of the target features seen so far.
  Eigen::MatrixXd seen(0, source.d());
  StepState state;
  std::vector<StreamRecord> out;
  if (csv) write_stream_csv_header(*csv);

  auto recompute = [&](long t) {
    StreamRecord rec;
    rec.t = t;
    const Eigen::MatrixXd targets = seen.topRows(t);
    try {
      PipelineOptions opts = pipeline;
      opts.delta = cfg.delta;
      double sigma = state.sigma_min;
      if (!single_choice && !std::isfinite(sigma)) {
        opts.beta = cfg.beta_grid.front();
        sigma = prepare_weight_stage(source, h0, targets, opts).c_hat.sigma_min();
      }
      const HyperChoice choice = select_hyperparams(t, n_p, cfg, sigma, k);
      rec.beta_star = choice.beta;
      rec.lambda_star = choice.lambda;
      rec.bound_value = choice.bound_value;
      opts.beta = choice.beta;
      const WeightStage stage = prepare_weight_stage(source, h0, targets, opts);
      const ThetaSelection sel = select_theta(stage, opts.solver);
      const WeightEstimate est = regularized_weights(sel.theta_hat, choice.lambda);
      state.model = fit_weighted_classifier(stage, est, opts.train);
      state.weights = est.weights;
      state.sigma_min = stage.c_hat.sigma_min();
      rec.sigma_min = state.sigma_min;
    } catch (const std::exception& e) {
      rec.error = e.what();
      rec.sigma_min = nan;
      if (!out.empty() && rec.bound_value == 0.0) {
        rec.beta_star = out.back().beta_star;
        rec.lambda_star = out.back().lambda_star;
        rec.bound_value = out.back().bound_value;
      }
    }
    rec.weights = state.weights;
    rec.target_accuracy = nan;
    rec.weight_mse = nan;
    if (state.model && eval) {
      if (static_cast<long>(eval->target_labels.size()) < t) {
        throw Error(ErrorCode::LengthMismatch, "fewer evaluation labels than streamed samples");
      }
      const Labels truth(eval->target_labels.begin(), eval->target_labels.begin() + t);
      rec.target_accuracy = accuracy(predict(*state.model, targets), truth);
      if (eval->true_weights) {
        if (eval->true_weights->size() != state.weights.size()) {
          throw Error(ErrorCode::DimensionMismatch, "true weights have the wrong length");
        }
        rec.weight_mse = (state.weights - *eval->true_weights).squaredNorm();
      }
    }
    if (csv) write_stream_csv_row(*csv, rec);
    out.push_back(std::move(rec));
  };

  long t = 0;
  while (auto x = stream.next()) {
    if (x->size() != source.d()) throw Error(ErrorCode::DimensionMismatch, "stream row has the wrong width");
    if (t >= cfg.horizon) throw Error(ErrorCode::InvalidParams, "stream is longer than the horizon");
    if (seen.rows() == t) seen.conservativeResize(std::max<Eigen::Index>(16, 2 * t), Eigen::NoChange);
    seen.row(t) = x->transpose();
    ++t;
    if (t % cfg.recompute_every == 0) recompute(t);
  }
  if (t == 0) throw Error(ErrorCode::EmptyInput, "empty target stream");
  if (t % cfg.recompute_every != 0) recompute(t);
  return out;
}

void write_stream_csv_header(std::ostream& os) {
  os << "t,lambda_star,beta_star,bound_value,target_accuracy,weight_mse,sigma_min,error\n";
}

void write_stream_csv_row(std::ostream& os, const StreamRecord& r) {
  std::string err = r.error;
  for (char& c : err) {
    if (c == ',' || c == '\n') c = ' ';
  }
  os << r.t << ',' << format_double(r.lambda_star) << ',' << format_double(r.beta_star) << ','
     << format_double(r.bound_value) << ',' << format_double(r.target_accuracy) << ','
     << format_double(r.weight_mse) << ',' << format_double(r.sigma_min) << ',' << err << '\n';
}

}  // namespace lshift

#include "lshift/distrib.hpp"

#include "lshift/error.hpp"
#include "lshift/io.hpp"
#include "lshift/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace lshift {

LabelDist::LabelDist(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) {
    throw Error(ErrorCode::InvalidDistribution, "need at least 2 classes");
  }
  for (Eigen::Index i = 0; i < probs_.size(); ++i) {
    if (!(probs_(i) >= 0.0) || !std::isfinite(probs_(i))) {
      throw Error(ErrorCode::InvalidDistribution, "negative or non-finite probability");
    }
  }
  if (std::abs(probs_.sum() - 1.0) > kSumTolerance) {
    throw Error(ErrorCode::InvalidDistribution, "probabilities do not sum to 1");
  }
}

LabelDist LabelDist::uniform(int k) {
  if (k < 2) throw Error(ErrorCode::InvalidDistribution, "need at least 2 classes");
  return LabelDist(Eigen::VectorXd::Constant(k, 1.0 / k));
}

LabelDist LabelDist::from_counts(const Eigen::VectorXd& counts) {
  const double total = counts.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyInput, "counts sum to zero");
  Eigen::VectorXd p = counts / total;
  // Pin the rounding residue on the largest entry so the sum check holds.
  Eigen::Index imax = 0;
  p.maxCoeff(&imax);
  p(imax) += 1.0 - p.sum();
  return LabelDist(std::move(p));
}

Eigen::VectorXd WeightShift::weights() const {
  return (1.0 + lambda_applied * theta.array()).max(0.0).matrix();
}

std::string_view to_string(ShiftKind kind) noexcept {
  switch (kind) {
    case ShiftKind::Uniform: return "uniform";
    case ShiftKind::TweakOne: return "tweak_one";
    case ShiftKind::MinorityClass: return "minority_class";
    case ShiftKind::Dirichlet: return "dirichlet";
  }
  return "uniform";
}

ShiftKind parse_shift_kind(std::string_view name) {
  if (name == "uniform") return ShiftKind::Uniform;
  if (name == "tweak_one") return ShiftKind::TweakOne;
  if (name == "minority_class") return ShiftKind::MinorityClass;
  if (name == "dirichlet") return ShiftKind::Dirichlet;
  throw Error(ErrorCode::InvalidSpec, "unknown shift kind '" + std::string(name) + "'");
}

void ShiftSpec::validate(int k) const {
  if (k < 2) throw Error(ErrorCode::InvalidSpec, "k must be >= 2");
  switch (kind) {
    case ShiftKind::Uniform:
      break;
    case ShiftKind::TweakOne:
      if (!(rho > 1.0 / k && rho < 1.0)) {
        throw Error(ErrorCode::InvalidSpec, "tweak_one requires 1/k < rho < 1");
      }
      break;
    case ShiftKind::MinorityClass:
      if (m < 1 || m >= k) throw Error(ErrorCode::InvalidSpec, "minority_class requires 1 <= m < k");
      if (!(p_minor > 0.0 && p_minor < 1.0 / k && m * p_minor < 1.0)) {
        throw Error(ErrorCode::InvalidSpec, "minority_class requires 0 < p_minor < 1/k");
      }
      break;
    case ShiftKind::Dirichlet:
      if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw Error(ErrorCode::InvalidSpec, "dirichlet requires alpha > 0");
      }
      break;
  }
}

namespace {

// Gamma(alpha) in log space. For alpha < 1 uses G(alpha) = G(alpha + 1) * U^(1/alpha),
// which keeps tiny concentrations from underflowing before normalization.
double log_gamma_sample(double alpha, Rng& rng) {
  if (alpha >= 1.0) {
    std::gamma_distribution<double> g(alpha, 1.0);
    return std::log(g(rng));
  }
  std::gamma_distribution<double> g(alpha + 1.0, 1.0);
  double u = uniform01(rng);
  while (u <= 0.0) u = uniform01(rng);
  return std::log(g(rng)) + std::log(u) / alpha;
}

std::vector<int> choose_classes(int k, int count, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates with our own uniform draw for portability.
  for (int i = 0; i < count; ++i) {
    const auto span = static_cast<std::uint64_t>(k - i);
    const int j = i + static_cast<int>(rng() % span);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

}  // namespace

LabelDist make_shift(const ShiftSpec& spec, int k) {
  spec.validate(k);
  Rng rng(spec.seed);
  switch (spec.kind) {
    case ShiftKind::Uniform:
      return LabelDist::uniform(k);
    case ShiftKind::TweakOne: {
      const int cls = choose_classes(k, 1, rng).front();
      Eigen::VectorXd p = Eigen::VectorXd::Constant(k, (1.0 - spec.rho) / (k - 1));
      p(cls) = spec.rho;
      return LabelDist::from_counts(p);
    }
    case ShiftKind::MinorityClass: {
      Eigen::VectorXd p = Eigen::VectorXd::Constant(k, (1.0 - spec.m * spec.p_minor) / (k - spec.m));
      for (int cls : choose_classes(k, spec.m, rng)) p(cls) = spec.p_minor;
      return LabelDist::from_counts(p);
    }
    case ShiftKind::Dirichlet: {
      Eigen::VectorXd logs(k);
      for (int i = 0; i < k; ++i) logs(i) = log_gamma_sample(spec.alpha, rng);
      const double top = logs.maxCoeff();
      return LabelDist::from_counts((logs.array() - top).exp().matrix());
    }
  }
  return LabelDist::uniform(k);
}

Eigen::VectorXd importance_weights(const LabelDist& q, const LabelDist& p) {
  if (q.size() != p.size()) throw Error(ErrorCode::DimensionMismatch, "q and p differ in k");
  Eigen::VectorXd w(q.size());
  for (int i = 0; i < q.size(); ++i) {
    if (p[i] > 0.0) {
      w(i) = q[i] / p[i];
    } else if (q[i] > 0.0) {
      throw Error(ErrorCode::UnsupportedClass,
                  "class " + std::to_string(i) + " has target mass but no source mass");
    } else {
      w(i) = 0.0;
    }
  }
  return w;
}

ShiftMetrics shift_metrics(const LabelDist& q, const LabelDist& p) {
  const Eigen::VectorXd w = importance_weights(q, p);
  ShiftMetrics out;
  out.d_inf = w.maxCoeff();
  out.d = q.probs().dot(w);
  return out;
}

Labels sample_labels(const LabelDist& dist, int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::EmptyInput, "sample_labels requires n >= 1");
  const int k = dist.size();
  std::vector<double> cdf(static_cast<std::size_t>(k));
  double acc = 0.0;
  int last_positive = 0;
  for (int i = 0; i < k; ++i) {
    acc += dist[i];
    cdf[static_cast<std::size_t>(i)] = acc;
    if (dist[i] > 0.0) last_positive = i;
  }
  Rng rng(seed);
  Labels out(static_cast<std::size_t>(n));
  for (auto& y : out) {
    const double u = uniform01(rng);
    // First positive-mass class whose cumulative mass reaches u; a draw exactly
    // on a boundary goes to the lower class.
    int cls = last_positive;
    for (int i = 0; i < k; ++i) {
      if (dist[i] > 0.0 && u <= cdf[static_cast<std::size_t>(i)]) {
        cls = i;
        break;
      }
    }
    y = cls;
  }
  return out;
}

std::string to_csv_row(const LabelDist& dist) {
  std::string row;
  for (int i = 0; i < dist.size(); ++i) {
    if (i) row += ',';
    row += format_double(dist[i]);
  }
  return row;
}

LabelDist label_dist_from_csv_row(std::string_view row) {
  const auto cells = split_csv_line(row);
  Eigen::VectorXd p(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) p(static_cast<Eigen::Index>(i)) = parse_double(cells[i]);
  return LabelDist(std::move(p));
}

}  // namespace lshift

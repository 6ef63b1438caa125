#pragma once

// Label distributions over k classes, synthetic label-shift generators and
// the importance-weight quantities derived from a (q, p) pair.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lshift {

using Labels = std::vector<int>;

/// Probability vector over k >= 2 classes. Entries are non-negative and sum
/// to one within 1e-12; zero-mass classes are allowed.
class LabelDist {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit LabelDist(Eigen::VectorXd probs);

  static LabelDist uniform(int k);
  /// Normalizes non-negative counts (or any non-negative vector) to a distribution.
  static LabelDist from_counts(const Eigen::VectorXd& counts);

  [[nodiscard]] int size() const noexcept { return static_cast<int>(probs_.size()); }
  [[nodiscard]] double operator[](int i) const { return probs_(i); }
  [[nodiscard]] const Eigen::VectorXd& probs() const noexcept { return probs_; }

 private:
  Eigen::VectorXd probs_;
};

/// theta = w - 1 together with the interpolation weight applied to it.
struct WeightShift {
  Eigen::VectorXd theta;
  double lambda_applied = 1.0;

  /// max(0, 1 + lambda * theta) elementwise.
  [[nodiscard]] Eigen::VectorXd weights() const;
};

enum class ShiftKind { Uniform, TweakOne, MinorityClass, Dirichlet };

std::string_view to_string(ShiftKind kind) noexcept;
ShiftKind parse_shift_kind(std::string_view name);

struct ShiftSpec {
  ShiftKind kind = ShiftKind::Uniform;
  double rho = 0.5;       // tweak-one mass on the chosen class
  int m = 1;              // number of minority classes
  double p_minor = 0.01;  // mass per minority class
  double alpha = 1.0;     // Dirichlet concentration
  std::uint64_t seed = 0;

  /// Throws Error(InvalidSpec) if the parameters are inconsistent for k classes.
  void validate(int k) const;
};

LabelDist make_shift(const ShiftSpec& spec, int k);

/// w_i = q_i / p_i, with w_i = 0 where both are zero.
/// Throws Error(UnsupportedClass) if q_i > 0 while p_i = 0.
Eigen::VectorXd importance_weights(const LabelDist& q, const LabelDist& p);

struct ShiftMetrics {
  double d_inf = 1.0;  // max_i q_i / p_i
  double d = 1.0;      // sum_i q_i^2 / p_i
};

ShiftMetrics shift_metrics(const LabelDist& q, const LabelDist& p);

/// n i.i.d. categorical draws via inverse CDF; deterministic given the seed.
Labels sample_labels(const LabelDist& dist, int n, std::uint64_t seed);

std::string to_csv_row(const LabelDist& dist);
LabelDist label_dist_from_csv_row(std::string_view row);

}  // namespace lshift

#pragma once

// Text and binary formats: CSV rows, the flat key = value config format,
// IDX image/label files and the weight-estimate JSON record.

#include "lshift/erm.hpp"
#include "lshift/estimator.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lshift {

/// Shortest round-trip decimal representation, always with '.'.
std::string format_double(double v);
double parse_double(std::string_view s);
std::vector<std::string> split_csv_line(std::string_view line);

/// Flat "key = value" lines; '#' starts a comment, blank lines are ignored.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& is);
  static KeyValueConfig load(const std::filesystem::path& path);

  [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
  [[nodiscard]] std::optional<std::string> get(const std::string& key) const;
  [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] double get_double(const std::string& key, double fallback) const;
  [[nodiscard]] long get_int(const std::string& key, long fallback) const;
  /// Comma-separated list of numbers.
  [[nodiscard]] std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  [[nodiscard]] std::vector<std::string> get_strings(const std::string& key,
                                                     const std::vector<std::string>& fallback) const;
  /// Keys that were set but never read; used to reject typos.
  [[nodiscard]] std::vector<std::string> unused_keys() const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> touched_;
};

/// Rows of "label,f1,...,fd". k defaults to max label + 1 (at least 2).
LabeledDataset read_labeled_csv(std::istream& is, std::optional<int> k = std::nullopt);
LabeledDataset read_labeled_csv(const std::filesystem::path& path, std::optional<int> k = std::nullopt);
/// Rows of "f1,...,fd".
Eigen::MatrixXd read_features_csv(std::istream& is);
Eigen::MatrixXd read_features_csv(const std::filesystem::path& path);
void write_labeled_csv(std::ostream& os, const LabeledDataset& data);

/// IDX images (magic 0x00000803) scaled to [0, 1] by /255, one row per image.
Eigen::MatrixXd load_idx_images(const std::filesystem::path& images_path);
/// IDX labels (magic 0x00000801).
Labels load_idx_labels(const std::filesystem::path& labels_path);
/// Both files; counts must match. k defaults to max label + 1.
LabeledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                        std::optional<int> k = std::nullopt);

std::string to_json(const WeightEstimate& est);

}  // namespace lshift

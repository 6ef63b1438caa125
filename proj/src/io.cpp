#include "lshift/io.hpp"

#include "lshift/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace lshift {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

double parse_double(std::string_view s) {
  s = trim(s);
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const char* begin = s.data();
  if (!s.empty() && s.front() == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorCode::InvalidConfig, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

KeyValueConfig KeyValueConfig::parse(std::istream& is) {
  KeyValueConfig cfg;
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = std::string(trim(line.substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return parse(in);
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  touched_[key] = true;
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? parse_double(*v) : fallback;
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  const double d = parse_double(*v);
  if (d != std::floor(d)) throw Error(ErrorCode::InvalidConfig, key + " must be an integer");
  return static_cast<long>(d);
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& cell : split_csv_line(*v)) out.push_back(parse_double(cell));
  return out;
}

std::vector<std::string> KeyValueConfig::get_strings(const std::string& key,
                                                     const std::vector<std::string>& fallback) const {
  auto v = get(key);
  return v ? split_csv_line(*v) : fallback;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, _] : values_) {
    if (!touched_.count(key)) out.push_back(key);
  }
  return out;
}

namespace {

int infer_k(const Labels& labels, std::optional<int> k) {
  if (k) return *k;
  int top = 0;
  for (int y : labels) top = std::max(top, y);
  return std::max(2, top + 1);
}

std::vector<std::vector<double>> read_rows(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split_csv_line(line)) row.push_back(parse_double(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::DimensionMismatch, "ragged CSV rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "CSV has no rows");
  return rows;
}

}  // namespace

LabeledDataset read_labeled_csv(std::istream& is, std::optional<int> k) {
  const auto rows = read_rows(is);
  if (rows.front().size() < 2) throw Error(ErrorCode::DimensionMismatch, "need a label and at least one feature");
  LabeledDataset data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size() - 1);
  data.features.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (row[0] != std::floor(row[0])) throw Error(ErrorCode::InvalidConfig, "label must be an integer");
    data.labels.push_back(static_cast<int>(row[0]));
    for (Eigen::Index j = 0; j < d; ++j) data.features(i, j) = row[static_cast<std::size_t>(j + 1)];
  }
  data.k = infer_k(data.labels, k);
  data.validate();
  return data;
}

LabeledDataset read_labeled_csv(const std::filesystem::path& path, std::optional<int> k) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_labeled_csv(in, k);
}

Eigen::MatrixXd read_features_csv(std::istream& is) {
  const auto rows = read_rows(is);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return x;
}

Eigen::MatrixXd read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_features_csv(in);
}

void write_labeled_csv(std::ostream& os, const LabeledDataset& data) {
  for (int i = 0; i < data.n(); ++i) {
    os << data.labels[static_cast<std::size_t>(i)];
    for (int j = 0; j < data.d(); ++j) os << ',' << format_double(data.features(i, j));
    os << '\n';
  }
}

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& what) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw Error(ErrorCode::TruncatedFile, what + ": short header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

std::vector<unsigned char> read_bytes(std::istream& in, std::size_t count, const std::string& what) {
  std::vector<unsigned char> buf(count);
  if (count && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count))) {
    throw Error(ErrorCode::TruncatedFile, what + ": expected " + std::to_string(count) + " payload bytes");
  }
  return buf;
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

}  // namespace

Eigen::MatrixXd load_idx_images(const std::filesystem::path& images_path) {
  auto in = open_binary(images_path);
  const std::string what = images_path.string();
  if (read_be32(in, what) != kIdxImagesMagic) throw Error(ErrorCode::BadMagic, what + ": not an IDX image file");
  const std::uint32_t n = read_be32(in, what);
  const std::uint32_t rows = read_be32(in, what);
  const std::uint32_t cols = read_be32(in, what);
  const std::size_t pixels = std::size_t{rows} * cols;
  const auto bytes = read_bytes(in, std::size_t{n} * pixels, what);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pixels));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < pixels; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = bytes[i * pixels + j] / 255.0;
    }
  }
  return x;
}

Labels load_idx_labels(const std::filesystem::path& labels_path) {
  auto in = open_binary(labels_path);
  const std::string what = labels_path.string();
  if (read_be32(in, what) != kIdxLabelsMagic) throw Error(ErrorCode::BadMagic, what + ": not an IDX label file");
  const std::uint32_t n = read_be32(in, what);
  const auto bytes = read_bytes(in, n, what);
  return Labels(bytes.begin(), bytes.end());
}

LabeledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                        std::optional<int> k) {
  LabeledDataset data;
  data.features = load_idx_images(images_path);
  data.labels = load_idx_labels(labels_path);
  if (static_cast<Eigen::Index>(data.labels.size()) != data.features.rows()) {
    throw Error(ErrorCode::CountMismatch, "image count " + std::to_string(data.features.rows()) +
                                              " != label count " + std::to_string(data.labels.size()));
  }
  data.k = infer_k(data.labels, k);
  data.validate();
  return data;
}

std::string to_json(const WeightEstimate& est) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j;
  j["method"] = std::string(to_string(est.method));
  j["theta"] = vec(est.theta_hat);
  j["weights"] = vec(est.weights);
  j["lambda"] = est.lambda;
  j["rho"] = est.rho_selected;
  j["objective"] = est.objective;
  return j.dump();
}

}  // namespace lshift

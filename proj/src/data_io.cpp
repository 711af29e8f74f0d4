#include "rimle/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rimle {

namespace {

std::string_view trim(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
    text.remove_prefix(1);
  }
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' ||
                           text.back() == '\r')) {
    text.remove_suffix(1);
  }
  return text;
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
  cell = trim(cell);
  if (cell.empty()) {
    throw ParseError("empty cell at row " + std::to_string(row) + ", column " +
                         std::to_string(col),
                     row, col);
  }
  // from_chars does not take an explicit plus sign.
  std::string_view digits = cell;
  if (digits.size() > 1 && digits.front() == '+') digits.remove_prefix(1);
  double value = 0.0;
  const auto* begin = digits.data();
  const auto* end = digits.data() + digits.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw ParseError("non-numeric cell '" + std::string(cell) + "' at row " +
                         std::to_string(row) + ", column " +
                         std::to_string(col),
                     row, col);
  }
  return value;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) throw InputError("cannot open '" + path + "' for reading");
  return stream;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream stream(path);
  if (!stream) throw InputError("cannot open '" + path + "' for writing");
  return stream;
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

DataMatrix read_matrix(std::istream& source, bool has_header, char delimiter) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_number = 0;
  std::size_t expected_cols = 0;
  while (std::getline(source, line)) {
    ++line_number;
    if (has_header && line_number == 1) continue;
    if (trim(line).empty()) continue;

    std::vector<double> cells;
    std::string_view rest = line;
    std::size_t col = 0;
    for (;;) {
      ++col;
      const std::size_t pos = rest.find(delimiter);
      const std::string_view cell =
          pos == std::string_view::npos ? rest : rest.substr(0, pos);
      cells.push_back(parse_cell(cell, line_number, col));
      if (pos == std::string_view::npos) break;
      rest = rest.substr(pos + 1);
    }
    if (expected_cols == 0) {
      expected_cols = cells.size();
    } else if (cells.size() != expected_cols) {
      throw ParseError("row " + std::to_string(line_number) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(expected_cols),
                       line_number, 0);
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw InputError("input contains no data rows");

  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(expected_cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < expected_cols; ++k) {
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          rows[i][k];
    }
  }
  return DataMatrix(std::move(values));
}

DataMatrix read_matrix_file(const std::string& path, bool has_header,
                            char delimiter) {
  auto stream = open_input(path);
  return read_matrix(stream, has_header, delimiter);
}

DataMatrix mad_standardize(const DataMatrix& data) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  Eigen::MatrixXd values = data.values();
  Eigen::VectorXd scales(p);
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < p; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      column[static_cast<std::size_t>(i)] = values(i, k);
    }
    const double center = median_of(column);
    for (double& v : column) v = std::abs(v - center);
    const double mad = median_of(column);
    if (mad == 0.0) {
      throw InputError("column " + std::to_string(k + 1) +
                       " has zero median absolute deviation");
    }
    values.col(k) /= mad;
    scales(k) = mad;
  }
  if (data.column_scales()) {
    scales = scales.cwiseProduct(*data.column_scales());
  }
  return DataMatrix(std::move(values), std::move(scales));
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      out(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]
                      .get<double>();
    }
  }
  return out;
}

nlohmann::json config_to_json(const EmConfig& cfg) {
  nlohmann::json j;
  j["delta"] = cfg.icd.delta();
  // JSON has no -inf; a null log_delta means "derive from delta".
  if (std::isfinite(cfg.icd.log_delta())) {
    j["log_delta"] = cfg.icd.log_delta();
  } else {
    j["log_delta"] = nullptr;
  }
  j["n_components"] = cfg.n_components;
  j["gamma"] = cfg.constraints.gamma;
  j["pi_max"] = cfg.constraints.pi_max;
  j["tol"] = cfg.tol;
  j["max_iter"] = cfg.max_iter;
  j["n_starts"] = cfg.n_starts;
  j["seed"] = cfg.seed;
  j["min_component_mass"] = cfg.min_component_mass;
  j["jobs"] = cfg.jobs;
  return j;
}

EmConfig config_from_json(const nlohmann::json& j) {
  EmConfig cfg;
  if (j.contains("log_delta") && !j["log_delta"].is_null()) {
    cfg.icd = IcdValue::from_log(j["log_delta"].get<double>());
  } else {
    cfg.icd = IcdValue::from_delta(j["delta"].get<double>());
  }
  cfg.n_components = j["n_components"].get<int>();
  cfg.constraints.gamma = j["gamma"].get<double>();
  cfg.constraints.pi_max = j["pi_max"].get<double>();
  cfg.tol = j["tol"].get<double>();
  cfg.max_iter = j["max_iter"].get<int>();
  cfg.n_starts = j["n_starts"].get<int>();
  cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.min_component_mass = j["min_component_mass"].get<double>();
  cfg.jobs = j["jobs"].get<int>();
  return cfg;
}

}  // namespace

void write_result(const FitResult& fit, const EmConfig& cfg,
                  const std::optional<Eigen::VectorXd>& column_scales,
                  std::ostream& destination, ResultFormat format) {
  if (format == ResultFormat::labels_only) {
    write_labels(fit.assignments, destination);
    return;
  }
  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  nlohmann::json f;
  f["noise_weight"] = fit.theta.noise_weight();
  f["weights"] = vector_to_json(fit.theta.weights());
  nlohmann::json means = nlohmann::json::array();
  nlohmann::json covariances = nlohmann::json::array();
  for (const auto& comp : fit.theta.components()) {
    means.push_back(vector_to_json(comp.mean()));
    covariances.push_back(matrix_to_json(comp.covariance()));
  }
  f["means"] = std::move(means);
  f["covariances"] = std::move(covariances);
  f["loglik"] = fit.loglik;
  f["iterations"] = fit.iterations;
  f["converged"] = fit.converged;
  f["noise_proportion"] = fit.noise_proportion;
  j["fit"] = std::move(f);
  j["assignments"] = fit.assignments;
  if (column_scales) {
    j["column_scales"] = vector_to_json(*column_scales);
  } else {
    j["column_scales"] = nullptr;
  }
  destination << j.dump(2) << '\n';
}

void write_result_file(const FitResult& fit, const EmConfig& cfg,
                       const std::optional<Eigen::VectorXd>& column_scales,
                       const std::string& path, ResultFormat format) {
  auto stream = open_output(path);
  write_result(fit, cfg, column_scales, stream, format);
}

ResultDocument read_result(std::istream& source) {
  nlohmann::json j;
  try {
    source >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid result document: ") + e.what(), 0, 0);
  }
  EmConfig cfg = config_from_json(j.at("config"));
  const auto& f = j.at("fit");
  Eigen::VectorXd weights = vector_from_json(f.at("weights"));
  std::vector<ComponentParams> components;
  for (std::size_t c = 0; c < f.at("means").size(); ++c) {
    components.push_back(ComponentParams::from_covariance(
        vector_from_json(f.at("means")[c]),
        matrix_from_json(f.at("covariances")[c])));
  }
  MixtureParams theta(f.at("noise_weight").get<double>(), std::move(weights),
                      std::move(components));
  std::optional<Eigen::VectorXd> scales;
  if (!j.at("column_scales").is_null()) {
    scales = vector_from_json(j.at("column_scales"));
  }
  return ResultDocument{std::move(cfg),
                        std::move(theta),
                        f.at("loglik").get<double>(),
                        f.at("iterations").get<int>(),
                        f.at("converged").get<bool>(),
                        f.at("noise_proportion").get<double>(),
                        j.at("assignments").get<std::vector<int>>(),
                        std::move(scales)};
}

ResultDocument read_result_file(const std::string& path) {
  auto stream = open_input(path);
  return read_result(stream);
}

std::vector<int> read_labels(std::istream& source) {
  std::vector<int> labels;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(source, line)) {
    ++line_number;
    const std::string_view cell = trim(line);
    if (cell.empty()) continue;
    int value = 0;
    const auto [ptr, ec] =
        std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
      throw ParseError("invalid label '" + std::string(cell) + "' at line " +
                           std::to_string(line_number),
                       line_number, 1);
    }
    labels.push_back(value);
  }
  if (labels.empty()) throw InputError("label input is empty");
  return labels;
}

std::vector<int> read_labels_file(const std::string& path) {
  auto stream = open_input(path);
  return read_labels(stream);
}

void write_labels(const std::vector<int>& labels, std::ostream& destination) {
  for (int label : labels) destination << label << '\n';
}

void write_labels_file(const std::vector<int>& labels,
                       const std::string& path) {
  auto stream = open_output(path);
  write_labels(labels, stream);
}

void write_matrix(const Eigen::MatrixXd& values, std::ostream& destination,
                  char delimiter) {
  char buffer[64];
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index k = 0; k < values.cols(); ++k) {
      if (k > 0) destination << delimiter;
      std::snprintf(buffer, sizeof(buffer), "%.17g", values(i, k));
      destination << buffer;
    }
    destination << '\n';
  }
}

void write_matrix_file(const Eigen::MatrixXd& values, const std::string& path,
                       char delimiter) {
  auto stream = open_output(path);
  write_matrix(values, stream, delimiter);
}

}  // namespace rimle

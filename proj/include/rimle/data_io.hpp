#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rimle/em.hpp"
#include "rimle/types.hpp"

namespace rimle {

/// Parses a delimited numeric table; rows are observations. Non-numeric
/// cells and ragged rows are rejected with 1-based row/column coordinates
/// (rows count physical lines, including a skipped header).
DataMatrix read_matrix(std::istream& source, bool has_header = false,
                       char delimiter = ',');
DataMatrix read_matrix_file(const std::string& path, bool has_header = false,
                            char delimiter = ',');

/// Divides every column by its median absolute deviation from the column
/// median (no consistency factor, so the result has column MAD exactly 1).
/// The factors are recorded in column_scales, composing with any already
/// present. A zero-MAD column is an error naming the column.
DataMatrix mad_standardize(const DataMatrix& data);

/// Fit output together with the configuration that produced it.
struct ResultDocument {
  EmConfig config;
  MixtureParams theta;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  double noise_proportion = 0.0;
  std::vector<int> assignments;
  std::optional<Eigen::VectorXd> column_scales;
};

enum class ResultFormat { structured, labels_only };

/// Writes a fit either as a self-describing JSON document (lossless double
/// round-trip) or as one integer label per line with 0 meaning noise.
void write_result(const FitResult& fit, const EmConfig& cfg,
                  const std::optional<Eigen::VectorXd>& column_scales,
                  std::ostream& destination, ResultFormat format);
void write_result_file(const FitResult& fit, const EmConfig& cfg,
                       const std::optional<Eigen::VectorXd>& column_scales,
                       const std::string& path, ResultFormat format);

/// Reads back a structured result document.
ResultDocument read_result(std::istream& source);
ResultDocument read_result_file(const std::string& path);

/// Label files: one integer per line.
std::vector<int> read_labels(std::istream& source);
std::vector<int> read_labels_file(const std::string& path);
void write_labels(const std::vector<int>& labels, std::ostream& destination);
void write_labels_file(const std::vector<int>& labels,
                       const std::string& path);

/// Writes a matrix in the same CSV dialect read_matrix accepts, at full
/// double precision.
void write_matrix(const Eigen::MatrixXd& values, std::ostream& destination,
                  char delimiter = ',');
void write_matrix_file(const Eigen::MatrixXd& values, const std::string& path,
                       char delimiter = ',');

}  // namespace rimle

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "rimle/errors.hpp"

namespace rimle {

inline constexpr double kLog2Pi = 1.8378770664093454836;

/// Log-density floor used when converting log values back to linear scale:
/// arguments below this are clamped before exponentiation so accumulated
/// densities underflow to a subnormal instead of to zero.
inline constexpr double kLogFloor = -745.0;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// exp() with the kLogFloor clamp. Exact -inf still maps to zero.
inline double exp_floored(double log_value) {
  if (log_value == kNegInf) return 0.0;
  return std::exp(std::max(log_value, kLogFloor));
}

/// n x p observation matrix, rows are observations. Optionally carries the
/// per-column scale factors that were divided out during standardization.
class DataMatrix {
 public:
  explicit DataMatrix(Eigen::MatrixXd values,
                      std::optional<Eigen::VectorXd> column_scales = {});

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::Index n() const { return values_.rows(); }
  Eigen::Index p() const { return values_.cols(); }
  const std::optional<Eigen::VectorXd>& column_scales() const {
    return column_scales_;
  }

  Eigen::VectorXd row(Eigen::Index i) const {
    return values_.row(i).transpose();
  }

  /// Number of distinct rows (exact comparison).
  Eigen::Index distinct_rows() const;

 private:
  Eigen::MatrixXd values_;
  std::optional<Eigen::VectorXd> column_scales_;
};

/// One Gaussian component: mean and covariance with its cached spectral
/// decomposition. Eigenvalues are sorted descending and strictly positive;
/// eigenvector columns are aligned with them.
class ComponentParams {
 public:
  /// Builds from a symmetric positive definite covariance matrix.
  static ComponentParams from_covariance(Eigen::VectorXd mean,
                                         const Eigen::MatrixXd& covariance);

  /// Builds from a spectral decomposition; the covariance is reconstructed
  /// as V diag(lambda) V^T. Eigenvalues may be passed in any order.
  static ComponentParams from_spectral(Eigen::VectorXd mean,
                                       Eigen::VectorXd eigenvalues,
                                       Eigen::MatrixXd eigenvectors);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  Eigen::Index dimension() const { return mean_.size(); }

 private:
  ComponentParams() = default;

  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::VectorXd eigenvalues_;   // descending, all > 0
  Eigen::MatrixXd eigenvectors_;  // orthonormal columns
};

/// Full mixture parameter vector: noise weight, component weights and the
/// component parameters. Weights are nonnegative and sum to one.
class MixtureParams {
 public:
  MixtureParams(double noise_weight, Eigen::VectorXd weights,
                std::vector<ComponentParams> components);

  double noise_weight() const { return noise_weight_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const std::vector<ComponentParams>& components() const {
    return components_;
  }
  Eigen::Index n_components() const {
    return static_cast<Eigen::Index>(components_.size());
  }
  Eigen::Index dimension() const { return components_.front().dimension(); }

 private:
  double noise_weight_;
  Eigen::VectorXd weights_;
  std::vector<ComponentParams> components_;
};

/// Improper constant density level, carried together with its natural log so
/// extreme values (log delta = -200 and below) never round-trip through exp.
class IcdValue {
 public:
  static IcdValue from_delta(double delta);
  static IcdValue from_log(double log_delta);
  static IcdValue zero() { return from_delta(0.0); }

  double delta() const { return delta_; }
  double log_delta() const { return log_delta_; }

 private:
  IcdValue(double delta, double log_delta)
      : delta_(delta), log_delta_(log_delta) {}

  double delta_;
  double log_delta_;
};

}  // namespace rimle

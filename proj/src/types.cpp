#include "rimle/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace rimle {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw InputError(message);
}

}  // namespace

DataMatrix::DataMatrix(Eigen::MatrixXd values,
                       std::optional<Eigen::VectorXd> column_scales)
    : values_(std::move(values)), column_scales_(std::move(column_scales)) {
  require(values_.rows() >= 1 && values_.cols() >= 1,
          "data matrix must have at least one row and one column");
  require(values_.allFinite(), "data matrix contains non-finite entries");
  if (column_scales_) {
    require(column_scales_->size() == values_.cols(),
            "column_scales length does not match the number of columns");
  }
}

Eigen::Index DataMatrix::distinct_rows() const {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values_.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto less = [this](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < values_.cols(); ++k) {
      if (values_(a, k) != values_(b, k)) return values_(a, k) < values_(b, k);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  Eigen::Index distinct = 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (less(order[i - 1], order[i])) ++distinct;
  }
  return distinct;
}

ComponentParams ComponentParams::from_covariance(
    Eigen::VectorXd mean, const Eigen::MatrixXd& covariance) {
  require(covariance.rows() == covariance.cols(),
          "covariance matrix must be square");
  require(mean.size() == covariance.rows(),
          "mean and covariance dimensions disagree");
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  require((covariance - covariance.transpose()).cwiseAbs().maxCoeff() <=
              1e-12 * scale,
          "covariance matrix is not symmetric");

  const Eigen::MatrixXd symmetrized =
      0.5 * (covariance + covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetrized);
  require(solver.info() == Eigen::Success,
          "eigendecomposition of the covariance failed");

  // The solver sorts ascending; flip to descending.
  const Eigen::Index p = covariance.rows();
  Eigen::VectorXd eigenvalues(p);
  Eigen::MatrixXd eigenvectors(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    eigenvalues(k) = solver.eigenvalues()(p - 1 - k);
    eigenvectors.col(k) = solver.eigenvectors().col(p - 1 - k);
  }
  require(eigenvalues(p - 1) > 0.0,
          "covariance matrix is not positive definite");

  ComponentParams out;
  out.mean_ = std::move(mean);
  out.covariance_ = symmetrized;
  out.eigenvalues_ = std::move(eigenvalues);
  out.eigenvectors_ = std::move(eigenvectors);
  return out;
}

ComponentParams ComponentParams::from_spectral(Eigen::VectorXd mean,
                                               Eigen::VectorXd eigenvalues,
                                               Eigen::MatrixXd eigenvectors) {
  const Eigen::Index p = mean.size();
  require(eigenvalues.size() == p, "eigenvalue count does not match dimension");
  require(eigenvectors.rows() == p && eigenvectors.cols() == p,
          "eigenvector matrix must be p x p");
  require(eigenvalues.minCoeff() > 0.0,
          "all eigenvalues must be strictly positive");
  require((eigenvectors.transpose() * eigenvectors -
           Eigen::MatrixXd::Identity(p, p))
                  .cwiseAbs()
                  .maxCoeff() <= 1e-10,
          "eigenvector matrix is not orthonormal");

  // Sort descending, keeping columns aligned.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return eigenvalues(a) > eigenvalues(b);
                   });
  Eigen::VectorXd sorted_values(p);
  Eigen::MatrixXd sorted_vectors(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    sorted_values(k) = eigenvalues(order[static_cast<std::size_t>(k)]);
    sorted_vectors.col(k) =
        eigenvectors.col(order[static_cast<std::size_t>(k)]);
  }

  Eigen::MatrixXd covariance =
      sorted_vectors * sorted_values.asDiagonal() * sorted_vectors.transpose();
  covariance = 0.5 * (covariance + covariance.transpose());

  ComponentParams out;
  out.mean_ = std::move(mean);
  out.covariance_ = std::move(covariance);
  out.eigenvalues_ = std::move(sorted_values);
  out.eigenvectors_ = std::move(sorted_vectors);
  return out;
}

MixtureParams::MixtureParams(double noise_weight, Eigen::VectorXd weights,
                             std::vector<ComponentParams> components)
    : noise_weight_(noise_weight),
      weights_(std::move(weights)),
      components_(std::move(components)) {
  require(!components_.empty(), "mixture needs at least one component");
  require(weights_.size() == static_cast<Eigen::Index>(components_.size()),
          "weight count does not match component count");
  require(noise_weight_ >= 0.0 && weights_.minCoeff() >= 0.0,
          "mixture weights must be nonnegative");
  const double total = noise_weight_ + weights_.sum();
  require(std::abs(total - 1.0) <= 1e-12,
          "mixture weights must sum to one");
  const Eigen::Index p = components_.front().dimension();
  for (const auto& comp : components_) {
    require(comp.dimension() == p, "components must share one dimension");
  }
}

IcdValue IcdValue::from_delta(double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw InputError("improper constant density must be finite and >= 0");
  }
  return IcdValue(delta, delta > 0.0 ? std::log(delta) : kNegInf);
}

IcdValue IcdValue::from_log(double log_delta) {
  if (std::isnan(log_delta) || log_delta == -kNegInf) {
    throw InputError("log improper constant density must not be NaN or +inf");
  }
  return IcdValue(log_delta == kNegInf ? 0.0 : std::exp(log_delta), log_delta);
}

}  // namespace rimle

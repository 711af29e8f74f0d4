#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rimle/em.hpp"
#include "rimle/types.hpp"

namespace rimle {

/// Hubert-Arabie adjusted Rand index between two labelings of the same
/// points: 1 for identical partitions up to relabeling, expected 0 for
/// independent random labelings. Symmetric in its arguments.
double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b);

/// Recipe for a synthetic sample: Gaussian components by weight plus a
/// uniform noise box. Weights and noise_fraction must sum to one.
struct SyntheticSpec {
  struct Component {
    double weight = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
  };

  Eigen::Index n = 0;
  Eigen::Index p = 0;
  std::vector<Component> components;
  double noise_fraction = 0.0;
  /// p pairs (lo, hi) bounding the uniform noise draws.
  std::vector<std::pair<double, double>> noise_box;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Draws the sample described by `spec`; labels use 0 for noise and 1..G for
/// the components. Bitwise reproducible for a fixed seed.
std::pair<DataMatrix, std::vector<int>> generate_mixture(
    const SyntheticSpec& spec);

/// One row of a delta-scan table.
struct DeltaScanRow {
  double log_delta = 0.0;
  double loglik = 0.0;
  double noise_proportion = 0.0;
  std::optional<double> ari;      // vs. the reference labels, when given
  bool converged = false;
  int iterations = 0;
  std::string error;              // empty when the fit succeeded
  std::optional<FitResult> fit;
};

/// The log delta grid used by default: -200, -100, -50 and every integer
/// from -20 up to -3.
std::vector<double> default_log_delta_grid();

/// Fits the data once per grid value, sharing the multistart seeds across
/// grid points so rows differ only through delta. Per-point failures are
/// recorded in the row and the scan continues.
std::vector<DeltaScanRow> delta_scan(
    const DataMatrix& data, const EmConfig& cfg,
    const std::vector<double>& log_delta_grid,
    const std::optional<std::vector<int>>& reference_labels = {});

/// Serializes scan rows as CSV with the fixed column order
/// log_delta,loglik,noise_proportion,ari,converged,iterations,status.
std::string delta_scan_csv(const std::vector<DeltaScanRow>& rows);

/// Numeric sides of the two robustness bounds, along with the verdicts.
struct BreakdownConditionDetail {
  /// The (G-1)-component log-likelihood sum must stay below this margin.
  double margin_rhs = 0.0;
  /// The enlarged average noise share; must stay below pi_max.
  double capacity_lhs = 0.0;
  bool margin_ok = false;
  bool capacity_ok = false;
};

/// Sufficient conditions under which adding r points cannot break the fit:
/// the first bound requires the G-component fit to beat the best (G-1)-
/// component fit by a margin, the second that the enlarged noise share stays
/// under pi_max. loglik_g_minus_1 is the (G-1)-component log-likelihood SUM
/// (n times the average). r = 0 collapses the second bound to the plain
/// noise-mass clause.
BreakdownConditionDetail breakdown_condition_details(
    const DataMatrix& data, const MixtureParams& theta_star, int r,
    const IcdValue& icd, const EmConfig& cfg, double loglik_g_minus_1,
    double phi_max);

std::pair<bool, bool> breakdown_conditions(const DataMatrix& data,
                                           const MixtureParams& theta_star,
                                           int r, const IcdValue& icd,
                                           const EmConfig& cfg,
                                           double loglik_g_minus_1,
                                           double phi_max);

/// Compact region whose boundary defines empirical breakdown: a matched mean
/// moving farther than shift_threshold, a component weight collapsing below
/// weight_threshold, or an eigenvalue leaving [eigen_low, eigen_high].
struct BreakdownThresholds {
  double shift_threshold = 0.0;
  double weight_threshold = 1e-4;
  double eigen_low = 0.0;
  double eigen_high = 0.0;

  /// Defaults derived from a clean fit: shift threshold 10x the largest
  /// within-cluster standard deviation, eigenvalue window [1e-6, 1e6] times
  /// the largest clean eigenvalue.
  static BreakdownThresholds from_clean_fit(const FitResult& clean);
};

/// Clean-vs-contaminated comparison for one outlier magnitude.
struct BreakdownReport {
  int r = 0;
  double outlier_magnitude = 0.0;
  std::optional<MixtureParams> clean_theta;
  std::optional<MixtureParams> contaminated_theta;
  double matched_mean_shift = 0.0;
  double min_weight = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  bool margin_condition_holds = false;
  bool capacity_condition_holds = false;
  bool broke_down = false;
  std::vector<int> outlier_assignments;  // labels of the r added points
  std::string error;                     // refit failure, when any
};

/// Appends r copies of (centroid + magnitude * e_1) to the sample.
DataMatrix contaminate(const DataMatrix& data, int r, double magnitude);

/// For each magnitude: contaminate, refit with identical seeds, match
/// components to the clean fit by greedy nearest means, and judge breakdown
/// against the thresholds (computed from the clean fit when not supplied).
/// Also evaluates the two sufficient robustness conditions on the clean fit,
/// with phi_max defaulting to (2 pi lambda_floor)^(-p/2) where lambda_floor
/// is the smallest eigenvalue seen across the clean multistart fits.
std::vector<BreakdownReport> breakdown_experiment(
    const DataMatrix& data, const EmConfig& cfg, int r,
    const std::vector<double>& magnitudes,
    const std::optional<BreakdownThresholds>& thresholds = {});

/// Serializes breakdown reports as CSV with the fixed column order
/// magnitude,r,matched_mean_shift,min_weight,min_eigenvalue,max_eigenvalue,
/// margin_condition,capacity_condition,broke_down,noise_labeled_outliers,status.
std::string breakdown_csv(const std::vector<BreakdownReport>& reports);

}  // namespace rimle

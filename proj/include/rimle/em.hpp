#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "rimle/constraints.hpp"
#include "rimle/rng.hpp"
#include "rimle/types.hpp"

namespace rimle {

/// All tuning knobs of the constrained EM fit.
struct EmConfig {
  IcdValue icd = IcdValue::zero();
  int n_components = 1;
  ConstraintConfig constraints{};
  double tol = 1e-8;
  int max_iter = 1000;
  int n_starts = 30;
  std::uint64_t seed = 0;
  /// A component whose responsibility mass drops to or below
  /// min_component_mass * n is treated as empty and re-seeded.
  double min_component_mass = 1e-10;
  /// Upper bound on concurrently running starts in multistart_fit.
  int jobs = 1;

  void validate() const;
};

/// Pseudo-posterior matrix of a whole sample: n x (G+1), column 0 is noise.
struct Responsibilities {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd column_sums;  // T_j, length G+1
};

/// Weighted moments of one component: responsibility mass, mean, scatter and
/// the scatter's spectral decomposition (eigenvalues descending, possibly 0).
struct ComponentMoments {
  double weight = 0.0;          // T_j
  Eigen::VectorXd mean;
  Eigen::MatrixXd scatter;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

/// Fitted parameters plus convergence metadata.
struct FitResult {
  MixtureParams theta;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<int> assignments;
  double noise_proportion = 0.0;
  /// Log-likelihood after the initial point and after each M-step. Reset
  /// whenever an empty component forces a re-seed, so it always covers one
  /// uninterrupted (hence monotone) EM run.
  std::vector<double> trajectory;
};

/// Outcome of one multistart run; failed starts carry the error text.
struct StartSummary {
  int index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Smallest covariance eigenvalue of this start's fit (NaN when failed).
  double min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

struct MultistartResult {
  FitResult best;
  int best_index = 0;
  std::vector<StartSummary> starts;
};

/// Feasibility of the sample: more distinct rows than G + ceil(n pi_max)
/// (just G when the improper constant density is zero).
bool check_feasibility(const DataMatrix& data, const EmConfig& cfg);

/// E-step: one posterior row per observation plus column sums.
Responsibilities e_step(const DataMatrix& data, const MixtureParams& theta,
                        const IcdValue& icd);

/// Proportion update with the noise cap: pi_0 = min(pi_max, T_0/n) and the
/// component weights rescaled so everything sums to one.
std::pair<double, Eigen::VectorXd> m_step_proportions(
    const Responsibilities& resp, const EmConfig& cfg);

/// Weighted means and scatter matrices with their spectral decompositions.
/// Components with no responsibility mass cannot be updated and raise
/// EmptyComponentError; em_fit intercepts that case earlier and re-seeds.
std::vector<ComponentMoments> m_step_moments(const DataMatrix& data,
                                             const Responsibilities& resp);

/// Covariance update under the eigenratio constraint: scatter matrices pass
/// through unchanged when the global ratio already holds, otherwise all
/// eigenvalues are jointly clamped via the constrained line search.
std::vector<ComponentParams> m_step_covariances(
    const std::vector<ComponentMoments>& moments, const EmConfig& cfg);

/// Constrained EM from a given starting point. Iterates E-step, proportion,
/// moment and covariance updates until the log-likelihood change drops to
/// tol or max_iter is hit.
FitResult em_fit(const DataMatrix& data, const EmConfig& cfg,
                 const MixtureParams& theta0);

/// Random starting point: G distinct sample points as means, the gamma-clamped
/// diagonal of the sample variances as the common covariance, uniform
/// component weights and a 5% initial noise weight.
MixtureParams initialize(const DataMatrix& data, const EmConfig& cfg, Rng& rng);

/// Runs n_starts independent fits from seeded initializations and returns the
/// one with the highest final log-likelihood (ties go to the lowest start
/// index). Start failures are recorded; only an all-fail run throws.
MultistartResult multistart_fit(const DataMatrix& data, const EmConfig& cfg);

}  // namespace rimle

#pragma once

#include <Eigen/Dense>
#include <string>

#include "rimle/types.hpp"

namespace rimle {

/// Constraint configuration: eigenratio bound gamma >= 1 and noise cap
/// pi_max in (0, 1).
struct ConstraintConfig {
  double gamma = 100.0;
  double pi_max = 0.5;

  void validate() const;
};

/// Inputs of the constrained eigenvalue program: per-component responsibility
/// masses and the G x p matrix of scatter eigenvalues. Zero eigenvalues are
/// legal on input; clamping maps them to the pivot.
struct EigenvalueBundle {
  Eigen::VectorXd weights;     // T_j >= 0
  Eigen::MatrixXd eigenvalues; // l_{j,k} >= 0
};

/// Result of the constrained eigenvalue line search.
struct EigenSearchResult {
  double m_star = 0.0;          // pivot of the clamp window [m, gamma m]
  Eigen::MatrixXd clamped;      // elementwise clamp of the input eigenvalues
  double objective = 0.0;       // objective value at m_star
};

/// Outcome of a parameter-space membership check, clause by clause.
struct SpaceCheck {
  bool ok = false;
  bool weights_ok = false;
  bool noise_ok = false;
  bool eigenratio_ok = false;
  double weight_sum = 0.0;
  double noise_mass = 0.0;
  double eigen_ratio = 0.0;
  /// Human-readable list of violated clauses with their values; empty when ok.
  std::string report;
};

/// Global eigenvalue ratio: max over all components and dimensions divided by
/// the min over all components and dimensions.
double eigen_ratio(const MixtureParams& theta);

/// Average noise pseudo-posterior n^-1 sum_i tau_0(x_i); the quantity capped
/// by pi_max in the constrained parameter space.
double noise_mass(const DataMatrix& data, const MixtureParams& theta,
                  const IcdValue& icd);

/// min(max(m, l), gamma m): projects one eigenvalue into [m, gamma m].
double clamp_eigenvalue(double m, double gamma, double l);

/// Minimizes F(m) = sum_j T_j sum_k [log lc_{j,k}(m) + l_{j,k} / lc_{j,k}(m)]
/// over m > 0, where lc is the clamp above. The objective is convex in m, so
/// a golden-section search on log m finds the minimizer. When the input
/// already satisfies the ratio bound it is returned bitwise unchanged.
EigenSearchResult eigen_line_search(const EigenvalueBundle& bundle,
                                    double gamma);

/// Membership test for the constrained parameter space: weights sum to one,
/// noise mass <= pi_max, eigenratio <= gamma. Each clause gets 1e-10 slack
/// (relative for the ratio, absolute for the other two).
SpaceCheck in_parameter_space(const DataMatrix& data, const MixtureParams& theta,
                              const IcdValue& icd, const ConstraintConfig& cfg);

}  // namespace rimle

#pragma once

#include <Eigen/Dense>
#include <span>

#include "rimle/types.hpp"

namespace rimle {

/// Log of the Gaussian density evaluated through the cached spectral form:
/// -(p log 2pi + sum_k log lambda_k + sum_k ((v_k . (x - mu))^2 / lambda_k)) / 2.
/// Never NaN; far tails come out as large negative finite values.
double gaussian_log_density(const Eigen::VectorXd& x,
                            const ComponentParams& comp);

/// Fills `terms` (size G+1) with the log summands of the pseudo-density:
/// terms[0] = log(pi_0 delta), terms[j] = log(pi_j) + log phi_j(x).
/// Zero weights and zero delta produce -inf entries.
void log_mixture_terms(const Eigen::VectorXd& x, const MixtureParams& theta,
                       const IcdValue& icd, std::span<double> terms);

/// Permutation-invariant log-sum-exp: the shifted exponentials are summed in
/// sorted order, so any reordering of `terms` yields the bitwise same result.
double log_sum_exp(std::span<const double> terms);

/// log of the pseudo-density pi_0 delta + sum_j pi_j phi_j(x). -inf when all
/// contributions vanish.
double log_psi_delta(const Eigen::VectorXd& x, const MixtureParams& theta,
                     const IcdValue& icd);

/// Linear-scale pseudo-density; log accumulation followed by a floored exp.
double psi_delta(const Eigen::VectorXd& x, const MixtureParams& theta,
                 const IcdValue& icd);

/// Average log pseudo-density over the sample: n^-1 sum_i log psi(x_i).
/// Throws DegenerateLikelihoodError if the pseudo-density vanishes at some
/// observation.
double log_pseudo_likelihood(const DataMatrix& data, const MixtureParams& theta,
                             const IcdValue& icd);

/// Writes the G+1 pseudo-posterior probabilities of x into `out`:
/// entry 0 is the noise posterior, entry j the j-th component posterior.
/// Entries are nonnegative and sum to one.
void posterior_into(const Eigen::VectorXd& x, const MixtureParams& theta,
                    const IcdValue& icd, std::span<double> out);

/// Convenience wrapper returning the posterior as a vector.
Eigen::VectorXd posterior(const Eigen::VectorXd& x, const MixtureParams& theta,
                          const IcdValue& icd);

/// Maximum-posterior assignment; exact ties resolve to the smallest index,
/// so the noise label 0 wins a tie against any component.
int assign(const Eigen::VectorXd& x, const MixtureParams& theta,
           const IcdValue& icd);

/// Argmax with the same tie rule, applied to an already computed posterior row.
int argmax_label(std::span<const double> posterior_row);

}  // namespace rimle

#include "rimle/model.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace rimle {

double gaussian_log_density(const Eigen::VectorXd& x,
                            const ComponentParams& comp) {
  if (x.size() != comp.dimension()) {
    throw InputError("point dimension does not match the component");
  }
  const Eigen::Index p = comp.dimension();
  const Eigen::VectorXd diff = x - comp.mean();
  double log_det = 0.0;
  double quad = 0.0;
  for (Eigen::Index k = 0; k < p; ++k) {
    const double lambda = comp.eigenvalues()(k);
    const double proj = comp.eigenvectors().col(k).dot(diff);
    log_det += std::log(lambda);
    quad += proj * proj / lambda;
  }
  return -0.5 * (static_cast<double>(p) * kLog2Pi + log_det + quad);
}

void log_mixture_terms(const Eigen::VectorXd& x, const MixtureParams& theta,
                       const IcdValue& icd, std::span<double> terms) {
  const Eigen::Index g = theta.n_components();
  if (terms.size() != static_cast<std::size_t>(g) + 1) {
    throw InputError("terms buffer must have G+1 entries");
  }
  // A positive density level is recognized through the log value: the linear
  // delta may underflow to zero for levels far below log(DBL_MIN).
  const double pi0 = theta.noise_weight();
  terms[0] = (pi0 > 0.0 && icd.log_delta() != kNegInf)
                 ? std::log(pi0) + icd.log_delta()
                 : kNegInf;
  for (Eigen::Index j = 0; j < g; ++j) {
    const double w = theta.weights()(j);
    terms[static_cast<std::size_t>(j) + 1] =
        w > 0.0 ? std::log(w) + gaussian_log_density(x, theta.components()[j])
                : kNegInf;
  }
}

double log_sum_exp(std::span<const double> terms) {
  double max_term = kNegInf;
  for (double t : terms) max_term = std::max(max_term, t);
  if (max_term == kNegInf) return kNegInf;

  // Summing the shifted exponentials in sorted order makes the result
  // independent of how the terms were ordered (label switching).
  std::vector<double> shifted;
  shifted.reserve(terms.size());
  for (double t : terms) {
    shifted.push_back(t == kNegInf ? 0.0 : std::exp(t - max_term));
  }
  std::sort(shifted.begin(), shifted.end());
  double sum = 0.0;
  for (double v : shifted) sum += v;
  return max_term + std::log(sum);
}

double log_psi_delta(const Eigen::VectorXd& x, const MixtureParams& theta,
                     const IcdValue& icd) {
  std::vector<double> terms(static_cast<std::size_t>(theta.n_components()) + 1);
  log_mixture_terms(x, theta, icd, terms);
  return log_sum_exp(terms);
}

double psi_delta(const Eigen::VectorXd& x, const MixtureParams& theta,
                 const IcdValue& icd) {
  return exp_floored(log_psi_delta(x, theta, icd));
}

double log_pseudo_likelihood(const DataMatrix& data, const MixtureParams& theta,
                             const IcdValue& icd) {
  if (data.p() != theta.dimension()) {
    throw InputError("data dimension does not match the mixture");
  }
  std::vector<double> terms(static_cast<std::size_t>(theta.n_components()) + 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    log_mixture_terms(data.row(i), theta, icd, terms);
    const double log_psi = log_sum_exp(terms);
    if (log_psi == kNegInf) {
      throw DegenerateLikelihoodError(
          "pseudo-density vanished at observation " + std::to_string(i + 1));
    }
    total += log_psi;
  }
  return total / static_cast<double>(data.n());
}

void posterior_into(const Eigen::VectorXd& x, const MixtureParams& theta,
                    const IcdValue& icd, std::span<double> out) {
  log_mixture_terms(x, theta, icd, out);
  double max_term = kNegInf;
  for (double t : out) max_term = std::max(max_term, t);
  if (max_term == kNegInf) {
    throw DegenerateLikelihoodError("pseudo-density vanished at the point");
  }
  std::vector<double> scratch;
  scratch.reserve(out.size());
  for (double& t : out) {
    t = (t == kNegInf) ? 0.0 : std::exp(t - max_term);
    scratch.push_back(t);
  }
  std::sort(scratch.begin(), scratch.end());
  double denom = 0.0;
  for (double v : scratch) denom += v;
  for (double& t : out) t /= denom;
}

Eigen::VectorXd posterior(const Eigen::VectorXd& x, const MixtureParams& theta,
                          const IcdValue& icd) {
  Eigen::VectorXd out(theta.n_components() + 1);
  posterior_into(x, theta, icd, std::span<double>(out.data(),
                                                  static_cast<std::size_t>(
                                                      out.size())));
  return out;
}

int argmax_label(std::span<const double> posterior_row) {
  int best = 0;
  double best_value = posterior_row[0];
  for (std::size_t j = 1; j < posterior_row.size(); ++j) {
    if (posterior_row[j] > best_value) {
      best_value = posterior_row[j];
      best = static_cast<int>(j);
    }
  }
  return best;
}

int assign(const Eigen::VectorXd& x, const MixtureParams& theta,
           const IcdValue& icd) {
  const Eigen::VectorXd post = posterior(x, theta, icd);
  return argmax_label(std::span<const double>(
      post.data(), static_cast<std::size_t>(post.size())));
}

}  // namespace rimle

#include "rimle/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "rimle/model.hpp"

namespace rimle {

void ConstraintConfig::validate() const {
  if (!(gamma >= 1.0)) throw InputError("gamma must be >= 1");
  if (!(pi_max > 0.0 && pi_max < 1.0)) {
    throw InputError("pi_max must lie strictly between 0 and 1");
  }
}

double eigen_ratio(const MixtureParams& theta) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& comp : theta.components()) {
    hi = std::max(hi, comp.eigenvalues()(0));
    lo = std::min(lo, comp.eigenvalues()(comp.dimension() - 1));
  }
  return hi / lo;
}

double noise_mass(const DataMatrix& data, const MixtureParams& theta,
                  const IcdValue& icd) {
  std::vector<double> row(static_cast<std::size_t>(theta.n_components()) + 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    posterior_into(data.row(i), theta, icd, row);
    total += row[0];
  }
  return total / static_cast<double>(data.n());
}

double clamp_eigenvalue(double m, double gamma, double l) {
  if (!(m > 0.0)) throw InputError("clamp pivot m must be positive");
  return std::min(std::max(m, l), gamma * m);
}

namespace {

/// Objective of the constrained eigenvalue program at pivot m. The per-entry
/// terms are summed in sorted order so component permutations cannot change
/// the result.
double search_objective(const EigenvalueBundle& bundle, double gamma,
                        double m, std::vector<double>& scratch) {
  scratch.clear();
  for (Eigen::Index j = 0; j < bundle.eigenvalues.rows(); ++j) {
    const double weight = bundle.weights(j);
    for (Eigen::Index k = 0; k < bundle.eigenvalues.cols(); ++k) {
      const double l = bundle.eigenvalues(j, k);
      const double clamped = clamp_eigenvalue(m, gamma, l);
      scratch.push_back(weight * (std::log(clamped) + l / clamped));
    }
  }
  std::sort(scratch.begin(), scratch.end());
  double sum = 0.0;
  for (double v : scratch) sum += v;
  return sum;
}

}  // namespace

EigenSearchResult eigen_line_search(const EigenvalueBundle& bundle,
                                    double gamma) {
  if (!(gamma >= 1.0)) throw InputError("gamma must be >= 1");
  const Eigen::Index g = bundle.eigenvalues.rows();
  const Eigen::Index p = bundle.eigenvalues.cols();
  if (bundle.weights.size() != g) {
    throw InputError("bundle weights length does not match eigenvalue rows");
  }
  if (g < 1 || p < 1) throw InputError("bundle must be non-empty");
  if (bundle.weights.minCoeff() < 0.0 ||
      bundle.eigenvalues.minCoeff() < 0.0) {
    throw InputError("bundle weights and eigenvalues must be nonnegative");
  }
  if (bundle.weights.maxCoeff() <= 0.0 ||
      bundle.eigenvalues.maxCoeff() <= 0.0) {
    throw DegenerateScatterError(
        "all responsibility masses or all scatter eigenvalues are zero");
  }

  const double l_max = bundle.eigenvalues.maxCoeff();
  double l_min_pos = l_max;
  double l_min = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < g; ++j) {
    for (Eigen::Index k = 0; k < p; ++k) {
      const double l = bundle.eigenvalues(j, k);
      l_min = std::min(l_min, l);
      if (l > 0.0) l_min_pos = std::min(l_min_pos, l);
    }
  }

  std::vector<double> scratch;
  scratch.reserve(static_cast<std::size_t>(g * p));

  // Already feasible: return the input untouched so the no-op branch of the
  // covariance update is bit-exact.
  if (l_min > 0.0 && l_max / l_min <= gamma) {
    EigenSearchResult out;
    out.m_star = l_min;
    out.clamped = bundle.eigenvalues;
    out.objective = search_objective(bundle, gamma, l_min, scratch);
    return out;
  }

  // Golden-section on t = log m; the objective is convex in m.
  double lo = std::log(l_min_pos / gamma) - 1.0;
  double hi = std::log(l_max) + 1.0;
  const double inv_phi = 0.6180339887498949;
  double t1 = hi - inv_phi * (hi - lo);
  double t2 = lo + inv_phi * (hi - lo);
  double f1 = search_objective(bundle, gamma, std::exp(t1), scratch);
  double f2 = search_objective(bundle, gamma, std::exp(t2), scratch);
  while (hi - lo > 1e-12) {
    if (f1 <= f2) {
      hi = t2;
      t2 = t1;
      f2 = f1;
      t1 = hi - inv_phi * (hi - lo);
      f1 = search_objective(bundle, gamma, std::exp(t1), scratch);
    } else {
      lo = t1;
      t1 = t2;
      f1 = f2;
      t2 = lo + inv_phi * (hi - lo);
      f2 = search_objective(bundle, gamma, std::exp(t2), scratch);
    }
  }
  double m_star = std::exp(0.5 * (lo + hi));

  // Closed-form polish. With the clamp pattern frozen at the bracketed
  // point, entries pinned at m contribute log m + l/m and entries pinned at
  // gamma m contribute log m + (l/gamma)/m up to constants, so the objective
  // is A log m + B/m + const with minimizer B/A. The pattern near the true
  // minimizer is stable, and the value check below keeps the polish safe.
  double pinned_mass = 0.0;
  double pinned_sum = 0.0;
  for (Eigen::Index j = 0; j < g; ++j) {
    for (Eigen::Index k = 0; k < p; ++k) {
      const double l = bundle.eigenvalues(j, k);
      if (l <= m_star) {
        pinned_mass += bundle.weights(j);
        pinned_sum += bundle.weights(j) * l;
      } else if (l >= gamma * m_star) {
        pinned_mass += bundle.weights(j);
        pinned_sum += bundle.weights(j) * l / gamma;
      }
    }
  }
  if (pinned_mass > 0.0 && pinned_sum > 0.0) {
    const double polished = pinned_sum / pinned_mass;
    if (search_objective(bundle, gamma, polished, scratch) <=
        search_objective(bundle, gamma, m_star, scratch)) {
      m_star = polished;
    }
  }

  EigenSearchResult out;
  out.m_star = m_star;
  out.clamped.resize(g, p);
  for (Eigen::Index j = 0; j < g; ++j) {
    for (Eigen::Index k = 0; k < p; ++k) {
      out.clamped(j, k) = clamp_eigenvalue(m_star, gamma,
                                           bundle.eigenvalues(j, k));
    }
  }
  out.objective = search_objective(bundle, gamma, m_star, scratch);
  return out;
}

SpaceCheck in_parameter_space(const DataMatrix& data,
                              const MixtureParams& theta, const IcdValue& icd,
                              const ConstraintConfig& cfg) {
  cfg.validate();
  SpaceCheck check;
  check.weight_sum = theta.noise_weight() + theta.weights().sum();
  check.noise_mass = noise_mass(data, theta, icd);
  check.eigen_ratio = eigen_ratio(theta);
  check.weights_ok = std::abs(check.weight_sum - 1.0) <= 1e-10;
  check.noise_ok = check.noise_mass <= cfg.pi_max + 1e-10;
  check.eigenratio_ok = check.eigen_ratio <= cfg.gamma * (1.0 + 1e-10);
  check.ok = check.weights_ok && check.noise_ok && check.eigenratio_ok;
  if (!check.ok) {
    std::ostringstream report;
    report.precision(17);
    if (!check.weights_ok) {
      report << "weights sum to " << check.weight_sum << " instead of 1; ";
    }
    if (!check.noise_ok) {
      report << "noise mass " << check.noise_mass << " exceeds pi_max "
             << cfg.pi_max << "; ";
    }
    if (!check.eigenratio_ok) {
      report << "eigenvalue ratio " << check.eigen_ratio << " exceeds gamma "
             << cfg.gamma << "; ";
    }
    check.report = report.str();
  }
  return check;
}

}  // namespace rimle

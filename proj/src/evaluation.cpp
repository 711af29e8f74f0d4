#include "rimle/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "rimle/model.hpp"

namespace rimle {

namespace {

double comb2(double count) { return 0.5 * count * (count - 1.0); }

std::string csv_sanitize(const std::string& text) {
  std::string out = text;
  for (char& c : out) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return out;
}

void format_double(std::ostream& os, double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  os << buffer;
}

}  // namespace

double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) {
    throw InputError("label vectors differ in length");
  }
  const std::size_t n = a.size();
  if (n < 2) throw InputError("adjusted Rand index needs at least two points");

  std::unordered_map<int, int> ids_a;
  std::unordered_map<int, int> ids_b;
  std::vector<int> ca(n);
  std::vector<int> cb(n);
  for (std::size_t i = 0; i < n; ++i) {
    ca[i] = ids_a.emplace(a[i], static_cast<int>(ids_a.size())).first->second;
    cb[i] = ids_b.emplace(b[i], static_cast<int>(ids_b.size())).first->second;
  }
  const std::size_t ka = ids_a.size();
  const std::size_t kb = ids_b.size();
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(ka), static_cast<Eigen::Index>(kb));
  for (std::size_t i = 0; i < n; ++i) table(ca[i], cb[i]) += 1.0;

  double pairs_joint = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      pairs_joint += comb2(table(r, c));
    }
  }
  double pairs_a = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    pairs_a += comb2(table.row(r).sum());
  }
  double pairs_b = 0.0;
  for (Eigen::Index c = 0; c < table.cols(); ++c) {
    pairs_b += comb2(table.col(c).sum());
  }

  const double expected = pairs_a * pairs_b / comb2(static_cast<double>(n));
  const double maximum = 0.5 * (pairs_a + pairs_b);
  const double denom = maximum - expected;
  if (denom == 0.0) return 1.0;  // both partitions trivial and identical
  return (pairs_joint - expected) / denom;
}

void SyntheticSpec::validate() const {
  if (n < 1) throw InputError("synthetic sample size must be >= 1");
  if (p < 1) throw InputError("synthetic dimension must be >= 1");
  if (noise_fraction < 0.0 || noise_fraction > 1.0) {
    throw InputError("noise_fraction must lie in [0, 1]");
  }
  double total = noise_fraction;
  for (const auto& comp : components) {
    if (comp.weight < 0.0) throw InputError("component weight must be >= 0");
    if (comp.mean.size() != p || comp.covariance.rows() != p ||
        comp.covariance.cols() != p) {
      throw InputError("component mean/covariance dimension mismatch");
    }
    total += comp.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InputError("weights plus noise_fraction must sum to one");
  }
  if (noise_fraction > 0.0) {
    if (static_cast<Eigen::Index>(noise_box.size()) != p) {
      throw InputError("noise_box must have one (lo, hi) pair per dimension");
    }
    for (const auto& [lo, hi] : noise_box) {
      if (!(lo <= hi)) throw InputError("noise_box bounds must be ordered");
    }
  }
}

std::pair<DataMatrix, std::vector<int>> generate_mixture(
    const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  // Spectral square roots of the covariances, computed once.
  std::vector<Eigen::MatrixXd> roots;
  roots.reserve(spec.components.size());
  for (const auto& comp : spec.components) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        0.5 * (comp.covariance + comp.covariance.transpose()));
    if (solver.info() != Eigen::Success ||
        solver.eigenvalues().minCoeff() < 0.0) {
      throw InputError("component covariance is not positive semidefinite");
    }
    roots.push_back(solver.eigenvectors() *
                    solver.eigenvalues().cwiseSqrt().asDiagonal() *
                    solver.eigenvectors().transpose());
  }

  Eigen::MatrixXd values(spec.n, spec.p);
  std::vector<int> labels(static_cast<std::size_t>(spec.n));
  Eigen::VectorXd z(spec.p);
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    const double u = rng.uniform();
    double cumulative = spec.noise_fraction;
    int label = 0;
    if (u >= cumulative) {
      for (std::size_t j = 0; j < spec.components.size(); ++j) {
        cumulative += spec.components[j].weight;
        if (u < cumulative || j + 1 == spec.components.size()) {
          label = static_cast<int>(j) + 1;
          break;
        }
      }
    }
    labels[static_cast<std::size_t>(i)] = label;
    if (label == 0) {
      for (Eigen::Index k = 0; k < spec.p; ++k) {
        const auto& [lo, hi] = spec.noise_box[static_cast<std::size_t>(k)];
        values(i, k) = rng.uniform(lo, hi);
      }
    } else {
      for (Eigen::Index k = 0; k < spec.p; ++k) z(k) = rng.normal();
      values.row(i) =
          (spec.components[static_cast<std::size_t>(label - 1)].mean +
           roots[static_cast<std::size_t>(label - 1)] * z)
              .transpose();
    }
  }
  return {DataMatrix(std::move(values)), std::move(labels)};
}

std::vector<double> default_log_delta_grid() {
  std::vector<double> grid = {-200.0, -100.0, -50.0};
  for (int v = -20; v <= -3; ++v) grid.push_back(static_cast<double>(v));
  return grid;
}

std::vector<DeltaScanRow> delta_scan(
    const DataMatrix& data, const EmConfig& cfg,
    const std::vector<double>& log_delta_grid,
    const std::optional<std::vector<int>>& reference_labels) {
  if (log_delta_grid.empty()) throw InputError("the log delta grid is empty");
  if (reference_labels &&
      reference_labels->size() != static_cast<std::size_t>(data.n())) {
    throw InputError("reference labels length does not match the sample");
  }

  std::vector<DeltaScanRow> rows;
  rows.reserve(log_delta_grid.size());
  for (double log_delta : log_delta_grid) {
    DeltaScanRow row;
    row.log_delta = log_delta;
    EmConfig point_cfg = cfg;
    point_cfg.icd = IcdValue::from_log(log_delta);
    try {
      MultistartResult fitted = multistart_fit(data, point_cfg);
      row.loglik = fitted.best.loglik;
      row.noise_proportion = fitted.best.noise_proportion;
      row.converged = fitted.best.converged;
      row.iterations = fitted.best.iterations;
      if (reference_labels) {
        row.ari = adjusted_rand(*reference_labels, fitted.best.assignments);
      }
      row.fit = std::move(fitted.best);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string delta_scan_csv(const std::vector<DeltaScanRow>& rows) {
  std::ostringstream os;
  os << "log_delta,loglik,noise_proportion,ari,converged,iterations,status\n";
  for (const auto& row : rows) {
    format_double(os, row.log_delta);
    os << ',';
    if (row.error.empty()) {
      format_double(os, row.loglik);
      os << ',';
      format_double(os, row.noise_proportion);
      os << ',';
      if (row.ari) format_double(os, *row.ari);
      os << ',' << (row.converged ? "true" : "false") << ','
         << row.iterations << ",ok\n";
    } else {
      os << ",,,," << 0 << ',' << csv_sanitize(row.error) << '\n';
    }
  }
  return os.str();
}

BreakdownConditionDetail breakdown_condition_details(
    const DataMatrix& data, const MixtureParams& theta_star, int r,
    const IcdValue& icd, const EmConfig& cfg, double loglik_g_minus_1,
    double phi_max) {
  if (r < 0) throw InputError("the number of added points must be >= 0");
  if (!(phi_max > 0.0)) throw InputError("phi_max must be positive");
  const double n = static_cast<double>(data.n());
  const double r_d = static_cast<double>(r);
  const double noise_weight = theta_star.noise_weight();
  const Eigen::Index g = theta_star.n_components();

  // Margin condition: the G-component fit must beat the best (G-1)-component
  // fit by enough to pay for parking the added points on the noise density.
  const double inflated_noise = noise_weight + r_d / n;
  const double log_inflated_noise_density =
      inflated_noise > 0.0 ? std::log(inflated_noise) + icd.log_delta()
                           : kNegInf;
  std::vector<double> terms(static_cast<std::size_t>(g) + 1);
  double sum_log = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    log_mixture_terms(data.row(i), theta_star, icd, terms);
    terms[0] = log_inflated_noise_density;
    sum_log += log_sum_exp(terms);
  }
  double rhs = sum_log;
  if (r > 0) {
    rhs += r_d * log_inflated_noise_density;
    rhs += (n + r_d) * std::log(n / (n + r_d));
    rhs -= r_d * std::log(phi_max);
  }

  // Capacity condition: even with the added points all absorbed as noise,
  // the average noise share must stay below pi_max.
  const double scaled_noise = n * noise_weight + r_d;
  const double log_numerator =
      scaled_noise > 0.0 ? std::log(scaled_noise) + icd.log_delta() : kNegInf;
  double tau_sum = 0.0;
  if (log_numerator != kNegInf) {
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const double log_psi = log_psi_delta(data.row(i), theta_star, icd);
      if (log_psi == kNegInf) {
        throw DegenerateLikelihoodError(
            "pseudo-density vanished at observation " + std::to_string(i + 1));
      }
      tau_sum += std::exp(log_numerator - std::log(n + r_d) - log_psi);
    }
  }
  const double lhs = (tau_sum + r_d) / (n + r_d);

  BreakdownConditionDetail detail;
  detail.margin_rhs = rhs;
  detail.capacity_lhs = lhs;
  detail.margin_ok = loglik_g_minus_1 < rhs;
  detail.capacity_ok = lhs < cfg.constraints.pi_max;
  return detail;
}

std::pair<bool, bool> breakdown_conditions(const DataMatrix& data,
                                           const MixtureParams& theta_star,
                                           int r, const IcdValue& icd,
                                           const EmConfig& cfg,
                                           double loglik_g_minus_1,
                                           double phi_max) {
  const BreakdownConditionDetail detail = breakdown_condition_details(
      data, theta_star, r, icd, cfg, loglik_g_minus_1, phi_max);
  return {detail.margin_ok, detail.capacity_ok};
}

BreakdownThresholds BreakdownThresholds::from_clean_fit(
    const FitResult& clean) {
  double max_eigenvalue = 0.0;
  for (const auto& comp : clean.theta.components()) {
    max_eigenvalue = std::max(max_eigenvalue, comp.eigenvalues()(0));
  }
  BreakdownThresholds thresholds;
  thresholds.shift_threshold = 10.0 * std::sqrt(max_eigenvalue);
  thresholds.weight_threshold = 1e-4;
  thresholds.eigen_low = 1e-6 * max_eigenvalue;
  thresholds.eigen_high = 1e6 * max_eigenvalue;
  return thresholds;
}

DataMatrix contaminate(const DataMatrix& data, int r, double magnitude) {
  if (r < 0) throw InputError("the number of added points must be >= 0");
  if (r == 0) return data;
  Eigen::VectorXd outlier = data.values().colwise().mean().transpose();
  outlier(0) += magnitude;
  Eigen::MatrixXd values(data.n() + r, data.p());
  values.topRows(data.n()) = data.values();
  for (int i = 0; i < r; ++i) {
    values.row(data.n() + i) = outlier.transpose();
  }
  return DataMatrix(std::move(values), data.column_scales());
}

namespace {

/// Greedy matching on the G x G mean-distance matrix: repeatedly take the
/// globally closest unused (clean, contaminated) pair.
std::vector<int> greedy_match(const MixtureParams& clean,
                              const MixtureParams& contaminated) {
  const Eigen::Index g = clean.n_components();
  Eigen::MatrixXd distance(g, g);
  for (Eigen::Index a = 0; a < g; ++a) {
    for (Eigen::Index b = 0; b < g; ++b) {
      distance(a, b) = (clean.components()[static_cast<std::size_t>(a)].mean() -
                        contaminated.components()[static_cast<std::size_t>(b)]
                            .mean())
                           .norm();
    }
  }
  std::vector<int> match(static_cast<std::size_t>(g), -1);
  std::vector<bool> used_a(static_cast<std::size_t>(g), false);
  std::vector<bool> used_b(static_cast<std::size_t>(g), false);
  for (Eigen::Index step = 0; step < g; ++step) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_a = 0;
    Eigen::Index best_b = 0;
    for (Eigen::Index a = 0; a < g; ++a) {
      if (used_a[static_cast<std::size_t>(a)]) continue;
      for (Eigen::Index b = 0; b < g; ++b) {
        if (used_b[static_cast<std::size_t>(b)]) continue;
        if (distance(a, b) < best) {
          best = distance(a, b);
          best_a = a;
          best_b = b;
        }
      }
    }
    match[static_cast<std::size_t>(best_a)] = static_cast<int>(best_b);
    used_a[static_cast<std::size_t>(best_a)] = true;
    used_b[static_cast<std::size_t>(best_b)] = true;
  }
  return match;
}

}  // namespace

std::vector<BreakdownReport> breakdown_experiment(
    const DataMatrix& data, const EmConfig& cfg, int r,
    const std::vector<double>& magnitudes,
    const std::optional<BreakdownThresholds>& thresholds) {
  if (r < 0) throw InputError("the number of added points must be >= 0");
  if (magnitudes.empty()) return {};

  const MultistartResult clean = multistart_fit(data, cfg);
  const BreakdownThresholds limits =
      thresholds ? *thresholds : BreakdownThresholds::from_clean_fit(clean.best);

  // Smallest eigenvalue seen across all successful clean starts feeds the
  // default density cap (2 pi lambda_floor)^(-p/2).
  double lambda_floor = std::numeric_limits<double>::infinity();
  for (const auto& summary : clean.starts) {
    if (summary.ok) lambda_floor = std::min(lambda_floor, summary.min_eigenvalue);
  }
  const double phi_max = std::pow(
      2.0 * 3.14159265358979323846 * lambda_floor,
      -0.5 * static_cast<double>(data.p()));

  // With a single component there is no reduced fit to compare against and
  // the margin condition holds vacuously.
  double loglik_g_minus_1 = -std::numeric_limits<double>::infinity();
  if (cfg.n_components > 1) {
    EmConfig reduced = cfg;
    reduced.n_components = cfg.n_components - 1;
    const MultistartResult fit_g1 = multistart_fit(data, reduced);
    loglik_g_minus_1 = static_cast<double>(data.n()) * fit_g1.best.loglik;
  }
  const auto [margin_holds, capacity_holds] = breakdown_conditions(
      data, clean.best.theta, r, cfg.icd, cfg, loglik_g_minus_1, phi_max);

  std::vector<BreakdownReport> reports;
  reports.reserve(magnitudes.size());
  for (double magnitude : magnitudes) {
    BreakdownReport report;
    report.r = r;
    report.outlier_magnitude = magnitude;
    report.clean_theta = clean.best.theta;
    report.margin_condition_holds = margin_holds;
    report.capacity_condition_holds = capacity_holds;
    try {
      const DataMatrix contaminated = contaminate(data, r, magnitude);
      const MultistartResult refit = multistart_fit(contaminated, cfg);
      const std::vector<int> match =
          greedy_match(clean.best.theta, refit.best.theta);

      double shift = 0.0;
      for (std::size_t a = 0; a < match.size(); ++a) {
        shift = std::max(
            shift, (clean.best.theta.components()[a].mean() -
                    refit.best.theta.components()[static_cast<std::size_t>(
                                                      match[a])]
                        .mean())
                       .norm());
      }
      report.matched_mean_shift = shift;
      report.min_weight = refit.best.theta.weights().minCoeff();
      double min_eig = std::numeric_limits<double>::infinity();
      double max_eig = 0.0;
      for (const auto& comp : refit.best.theta.components()) {
        min_eig = std::min(min_eig, comp.eigenvalues()(comp.dimension() - 1));
        max_eig = std::max(max_eig, comp.eigenvalues()(0));
      }
      report.min_eigenvalue = min_eig;
      report.max_eigenvalue = max_eig;
      report.outlier_assignments.assign(
          refit.best.assignments.end() - r, refit.best.assignments.end());
      report.broke_down = shift > limits.shift_threshold ||
                          report.min_weight < limits.weight_threshold ||
                          min_eig < limits.eigen_low ||
                          max_eig > limits.eigen_high;
      report.contaminated_theta = refit.best.theta;
    } catch (const std::exception& e) {
      report.error = e.what();
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

std::string breakdown_csv(const std::vector<BreakdownReport>& reports) {
  std::ostringstream os;
  os << "magnitude,r,matched_mean_shift,min_weight,min_eigenvalue,"
        "max_eigenvalue,margin_condition,capacity_condition,broke_down,"
        "noise_labeled_outliers,status\n";
  for (const auto& report : reports) {
    format_double(os, report.outlier_magnitude);
    os << ',' << report.r << ',';
    if (report.error.empty()) {
      format_double(os, report.matched_mean_shift);
      os << ',';
      format_double(os, report.min_weight);
      os << ',';
      format_double(os, report.min_eigenvalue);
      os << ',';
      format_double(os, report.max_eigenvalue);
      os << ',' << (report.margin_condition_holds ? "true" : "false") << ','
         << (report.capacity_condition_holds ? "true" : "false") << ','
         << (report.broke_down ? "true" : "false") << ','
         << std::count(report.outlier_assignments.begin(),
                       report.outlier_assignments.end(), 0)
         << ",ok\n";
    } else {
      os << ",,,," << (report.margin_condition_holds ? "true" : "false") << ','
         << (report.capacity_condition_holds ? "true" : "false") << ",,,"
         << csv_sanitize(report.error) << '\n';
    }
  }
  return os.str();
}

}  // namespace rimle

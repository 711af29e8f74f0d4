#include "rimle/em.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>
#include <vector>

#include "rimle/model.hpp"

namespace rimle {

void EmConfig::validate() const {
  if (n_components < 1) throw InputError("n_components must be >= 1");
  if (!(tol > 0.0)) throw InputError("tol must be positive");
  if (max_iter < 1) throw InputError("max_iter must be >= 1");
  if (n_starts < 1) throw InputError("n_starts must be >= 1");
  if (!(min_component_mass >= 0.0)) {
    throw InputError("min_component_mass must be >= 0");
  }
  if (jobs < 1) throw InputError("jobs must be >= 1");
  constraints.validate();
}

bool check_feasibility(const DataMatrix& data, const EmConfig& cfg) {
  const Eigen::Index distinct = data.distinct_rows();
  if (cfg.icd.log_delta() == kNegInf) {
    return distinct > cfg.n_components;
  }
  const auto required =
      cfg.n_components +
      static_cast<Eigen::Index>(std::ceil(
          static_cast<double>(data.n()) * cfg.constraints.pi_max));
  return distinct > required;
}

namespace {

struct EStepOutcome {
  Responsibilities resp;
  double loglik = 0.0;
};

/// One pass over the sample producing posterior rows, column sums and the
/// average log pseudo-density of the same parameter vector.
EStepOutcome e_step_internal(const DataMatrix& data, const MixtureParams& theta,
                             const IcdValue& icd) {
  const Eigen::Index n = data.n();
  const Eigen::Index g = theta.n_components();
  EStepOutcome out;
  out.resp.matrix.resize(n, g + 1);
  std::vector<double> terms(static_cast<std::size_t>(g) + 1);
  std::vector<double> scratch(terms.size());
  double total_log_psi = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    log_mixture_terms(data.row(i), theta, icd, terms);
    double max_term = kNegInf;
    for (double t : terms) max_term = std::max(max_term, t);
    if (max_term == kNegInf) {
      throw DegenerateLikelihoodError(
          "pseudo-density vanished at observation " + std::to_string(i + 1));
    }
    scratch.clear();
    for (double& t : terms) {
      t = (t == kNegInf) ? 0.0 : std::exp(t - max_term);
      scratch.push_back(t);
    }
    std::sort(scratch.begin(), scratch.end());
    double denom = 0.0;
    for (double v : scratch) denom += v;
    for (std::size_t j = 0; j < terms.size(); ++j) {
      out.resp.matrix(i, static_cast<Eigen::Index>(j)) = terms[j] / denom;
    }
    total_log_psi += max_term + std::log(denom);
  }
  out.resp.column_sums = out.resp.matrix.colwise().sum().transpose();
  out.loglik = total_log_psi / static_cast<double>(n);
  return out;
}

double column_median(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Robust per-column squared scale for seeding covariances: the squared
/// median absolute deviation, falling back to the plain variance for
/// columns whose MAD vanishes. Clamped into a feasible eigenvalue window so
/// the resulting diagonal matrix respects the ratio bound.
Eigen::VectorXd clamped_column_scales(const DataMatrix& data, double gamma) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  Eigen::VectorXd scales(p);
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < p; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      column[static_cast<std::size_t>(i)] = data.values()(i, k);
    }
    const double center = column_median(column);
    for (double& v : column) v = std::abs(v - center);
    const double mad = column_median(column);
    if (mad > 0.0) {
      scales(k) = mad * mad;
    } else {
      const double mean = data.values().col(k).mean();
      scales(k) = (data.values().col(k).array() - mean).square().mean();
    }
  }
  EigenvalueBundle bundle;
  bundle.weights = Eigen::VectorXd::Ones(1);
  bundle.eigenvalues = scales.transpose();
  const EigenSearchResult searched = eigen_line_search(bundle, gamma);
  return searched.clamped.row(0).transpose();
}

MixtureParams reseed_components(const DataMatrix& data,
                                const MixtureParams& theta,
                                const EmConfig& cfg,
                                const std::vector<Eigen::Index>& starved) {
  // Each starved component restarts at one of the worst-fitted points.
  const Eigen::Index n = data.n();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Eigen::VectorXd log_psi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    log_psi(i) = log_psi_delta(data.row(i), theta, cfg.icd);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return log_psi(a) < log_psi(b);
                   });

  const Eigen::VectorXd variances =
      clamped_column_scales(data, cfg.constraints.gamma);
  const Eigen::MatrixXd vectors =
      Eigen::MatrixXd::Identity(data.p(), data.p());

  Eigen::VectorXd weights = theta.weights();
  std::vector<ComponentParams> components = theta.components();
  double seeded_weight = 1.0 / static_cast<double>(n);
  double released = 0.0;
  for (Eigen::Index j : starved) released += weights(j);
  const double kept = theta.noise_weight() + weights.sum() - released;
  double scale = 0.0;
  if (kept > 0.0) {
    scale = (1.0 - seeded_weight * static_cast<double>(starved.size())) / kept;
  } else {
    // Nothing left to rescale: split all mass across the re-seeded
    // components so the weights still sum to one.
    seeded_weight = 1.0 / static_cast<double>(starved.size());
  }

  double noise_weight = theta.noise_weight() * scale;
  weights *= scale;
  // Walk the worst-fitted points, skipping duplicates, so two re-seeded
  // components never coincide (identical components would stay identical
  // under every subsequent update).
  std::vector<Eigen::Index> used;
  std::size_t next_point = 0;
  for (Eigen::Index j : starved) {
    while (next_point + 1 < order.size()) {
      const bool duplicate = std::any_of(
          used.begin(), used.end(), [&](Eigen::Index u) {
            return data.values().row(order[next_point]) ==
                   data.values().row(u);
          });
      if (!duplicate) break;
      ++next_point;
    }
    used.push_back(order[next_point]);
    weights(j) = seeded_weight;
    components[static_cast<std::size_t>(j)] = ComponentParams::from_spectral(
        data.row(order[next_point]), variances, vectors);
    if (next_point + 1 < order.size()) ++next_point;
  }
  return MixtureParams(noise_weight, std::move(weights), std::move(components));
}

MixtureParams combined_m_step(const DataMatrix& data,
                              const Responsibilities& resp,
                              const EmConfig& cfg) {
  auto [noise_weight, weights] = m_step_proportions(resp, cfg);
  const std::vector<ComponentMoments> moments = m_step_moments(data, resp);
  std::vector<ComponentParams> components = m_step_covariances(moments, cfg);
  return MixtureParams(noise_weight, std::move(weights), std::move(components));
}

}  // namespace

Responsibilities e_step(const DataMatrix& data, const MixtureParams& theta,
                        const IcdValue& icd) {
  return e_step_internal(data, theta, icd).resp;
}

std::pair<double, Eigen::VectorXd> m_step_proportions(
    const Responsibilities& resp, const EmConfig& cfg) {
  const Eigen::Index n = resp.matrix.rows();
  const Eigen::Index g = resp.matrix.cols() - 1;
  if (n < 1) throw InputError("responsibilities are empty");

  const double noise_share = resp.column_sums(0) / static_cast<double>(n);
  if (noise_share >= 1.0) {
    throw DegenerateFitError(
        "all responsibility mass fell on the noise component");
  }
  const double noise_weight = std::min(cfg.constraints.pi_max, noise_share);
  const double rescale = (1.0 - noise_weight) / (1.0 - noise_share);
  Eigen::VectorXd weights(g);
  for (Eigen::Index j = 0; j < g; ++j) {
    weights(j) = rescale * resp.column_sums(j + 1) / static_cast<double>(n);
  }
  // Renormalize away the accumulated rounding so downstream invariants hold.
  // The total is accumulated in sorted order to stay invariant under
  // component permutations.
  std::vector<double> parts(static_cast<std::size_t>(g) + 1);
  parts[0] = noise_weight;
  for (Eigen::Index j = 0; j < g; ++j) {
    parts[static_cast<std::size_t>(j) + 1] = weights(j);
  }
  std::sort(parts.begin(), parts.end());
  double total = 0.0;
  for (double part : parts) total += part;
  weights /= total;
  return {noise_weight / total, std::move(weights)};
}

std::vector<ComponentMoments> m_step_moments(const DataMatrix& data,
                                             const Responsibilities& resp) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const Eigen::Index g = resp.matrix.cols() - 1;
  if (resp.matrix.rows() != n) {
    throw InputError("responsibility rows do not match the sample size");
  }
  std::vector<ComponentMoments> moments;
  moments.reserve(static_cast<std::size_t>(g));
  for (Eigen::Index j = 0; j < g; ++j) {
    const double mass = resp.column_sums(j + 1);
    if (!(mass > 0.0)) {
      throw EmptyComponentError("component " + std::to_string(j + 1) +
                                " has no responsibility mass");
    }
    ComponentMoments m;
    m.weight = mass;
    const Eigen::VectorXd tau = resp.matrix.col(j + 1);
    m.mean = (data.values().transpose() * tau) / mass;
    const Eigen::MatrixXd centered =
        data.values().rowwise() - m.mean.transpose();
    Eigen::MatrixXd scatter =
        centered.transpose() * (centered.array().colwise() * tau.array())
                                   .matrix() /
        mass;
    scatter = 0.5 * (scatter + scatter.transpose());
    m.scatter = scatter;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(scatter);
    if (solver.info() != Eigen::Success) {
      throw DegenerateScatterError("scatter eigendecomposition failed");
    }
    m.eigenvalues.resize(p);
    m.eigenvectors.resize(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
      // Descending order; tiny negative rounding is floored at zero.
      m.eigenvalues(k) = std::max(0.0, solver.eigenvalues()(p - 1 - k));
      m.eigenvectors.col(k) = solver.eigenvectors().col(p - 1 - k);
    }
    moments.push_back(std::move(m));
  }
  return moments;
}

std::vector<ComponentParams> m_step_covariances(
    const std::vector<ComponentMoments>& moments, const EmConfig& cfg) {
  if (moments.empty()) throw InputError("no component moments supplied");
  const Eigen::Index g = static_cast<Eigen::Index>(moments.size());
  const Eigen::Index p = moments.front().eigenvalues.size();

  EigenvalueBundle bundle;
  bundle.weights.resize(g);
  bundle.eigenvalues.resize(g, p);
  for (Eigen::Index j = 0; j < g; ++j) {
    bundle.weights(j) = moments[static_cast<std::size_t>(j)].weight;
    bundle.eigenvalues.row(j) =
        moments[static_cast<std::size_t>(j)].eigenvalues.transpose();
  }
  const EigenSearchResult searched =
      eigen_line_search(bundle, cfg.constraints.gamma);

  std::vector<ComponentParams> components;
  components.reserve(moments.size());
  for (Eigen::Index j = 0; j < g; ++j) {
    const auto& m = moments[static_cast<std::size_t>(j)];
    components.push_back(ComponentParams::from_spectral(
        m.mean, searched.clamped.row(j).transpose(), m.eigenvectors));
  }
  return components;
}

FitResult em_fit(const DataMatrix& data, const EmConfig& cfg,
                 const MixtureParams& theta0) {
  cfg.validate();
  if (!check_feasibility(data, cfg)) {
    throw InputError(
        "too few distinct observations for the requested component count "
        "and noise cap");
  }
  if (theta0.dimension() != data.p()) {
    throw InputError("starting point dimension does not match the data");
  }
  if (theta0.n_components() != cfg.n_components) {
    throw InputError("starting point has the wrong number of components");
  }

  const double empty_threshold =
      cfg.min_component_mass * static_cast<double>(data.n());
  MixtureParams theta = theta0;
  std::vector<double> trajectory;
  int reseeds = 0;

  // E-step plus starvation handling: a component whose mass collapses is
  // re-seeded (bounded number of times) and the trajectory restarts, since
  // re-seeding is a jump, not an EM step.
  auto e_step_checked = [&](MixtureParams& th, bool& reseeded) {
    reseeded = false;
    for (;;) {
      EStepOutcome outcome = e_step_internal(data, th, cfg.icd);
      std::vector<Eigen::Index> starved;
      for (Eigen::Index j = 1; j < outcome.resp.matrix.cols(); ++j) {
        if (outcome.resp.column_sums(j) <= empty_threshold) {
          starved.push_back(j - 1);
        }
      }
      if (starved.empty()) return outcome;
      if (reseeds >= 3) {
        throw EmptyComponentError(
            "a component kept losing all responsibility mass after 3 "
            "re-seeds");
      }
      th = reseed_components(data, th, cfg, starved);
      trajectory.clear();
      reseeded = true;
      ++reseeds;
    }
  };

  bool reseeded = false;
  EStepOutcome current = e_step_checked(theta, reseeded);
  trajectory.push_back(current.loglik);

  bool converged = false;
  int iterations = 0;
  for (int s = 1; s <= cfg.max_iter; ++s) {
    const double previous = current.loglik;
    theta = combined_m_step(data, current.resp, cfg);
    current = e_step_checked(theta, reseeded);
    trajectory.push_back(current.loglik);
    iterations = s;
    if (!reseeded && std::abs(current.loglik - previous) <= cfg.tol) {
      converged = true;
      break;
    }
  }

  FitResult result{std::move(theta)};
  result.loglik = current.loglik;
  result.iterations = iterations;
  result.converged = converged;
  result.trajectory = std::move(trajectory);
  result.assignments.resize(static_cast<std::size_t>(data.n()));
  Eigen::Index noise_count = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const auto row = current.resp.matrix.row(i);
    int label = 0;
    double best = row(0);
    for (Eigen::Index j = 1; j < row.size(); ++j) {
      if (row(j) > best) {
        best = row(j);
        label = static_cast<int>(j);
      }
    }
    result.assignments[static_cast<std::size_t>(i)] = label;
    if (label == 0) ++noise_count;
  }
  result.noise_proportion =
      static_cast<double>(noise_count) / static_cast<double>(data.n());
  return result;
}

MixtureParams initialize(const DataMatrix& data, const EmConfig& cfg,
                         Rng& rng) {
  cfg.validate();
  const Eigen::Index n = data.n();
  const Eigen::Index g = cfg.n_components;

  // Representatives of the distinct rows: lexicographic sort, then the first
  // data index of each run, listed in data order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto row_less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < data.p(); ++k) {
      if (data.values()(a, k) != data.values()(b, k)) {
        return data.values()(a, k) < data.values()(b, k);
      }
    }
    return false;
  };
  std::sort(order.begin(), order.end(), row_less);
  std::vector<Eigen::Index> representatives;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || row_less(order[i - 1], order[i])) {
      representatives.push_back(order[i]);
    } else {
      representatives.back() = std::min(representatives.back(), order[i]);
    }
  }
  std::sort(representatives.begin(), representatives.end());
  if (static_cast<Eigen::Index>(representatives.size()) < g) {
    throw InputError("fewer distinct observations than components");
  }

  // Partial Fisher-Yates draw of G distinct representatives.
  for (Eigen::Index j = 0; j < g; ++j) {
    const auto pick =
        j + static_cast<Eigen::Index>(
                rng.integer(representatives.size() - static_cast<std::size_t>(j)));
    std::swap(representatives[static_cast<std::size_t>(j)],
              representatives[static_cast<std::size_t>(pick)]);
  }

  const Eigen::VectorXd variances =
      clamped_column_scales(data, cfg.constraints.gamma);
  const Eigen::MatrixXd vectors =
      Eigen::MatrixXd::Identity(data.p(), data.p());

  const double noise_weight = 0.05;
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(
      g, (1.0 - noise_weight) / static_cast<double>(g));
  std::vector<ComponentParams> components;
  components.reserve(static_cast<std::size_t>(g));
  for (Eigen::Index j = 0; j < g; ++j) {
    components.push_back(ComponentParams::from_spectral(
        data.row(representatives[static_cast<std::size_t>(j)]), variances,
        vectors));
  }
  return MixtureParams(noise_weight, std::move(weights), std::move(components));
}

MultistartResult multistart_fit(const DataMatrix& data, const EmConfig& cfg) {
  cfg.validate();
  if (!check_feasibility(data, cfg)) {
    throw InputError(
        "too few distinct observations for the requested component count "
        "and noise cap");
  }

  const int n_starts = cfg.n_starts;
  std::vector<std::optional<FitResult>> fits(
      static_cast<std::size_t>(n_starts));
  std::vector<StartSummary> summaries(static_cast<std::size_t>(n_starts));

  auto run_start = [&](int index) {
    StartSummary& summary = summaries[static_cast<std::size_t>(index)];
    summary.index = index;
    summary.seed = Rng::derive(cfg.seed, static_cast<std::uint64_t>(index));
    try {
      Rng rng(summary.seed);
      const MixtureParams theta0 = initialize(data, cfg, rng);
      FitResult fit = em_fit(data, cfg, theta0);
      summary.ok = true;
      summary.loglik = fit.loglik;
      summary.iterations = fit.iterations;
      summary.converged = fit.converged;
      summary.min_eigenvalue = std::numeric_limits<double>::infinity();
      for (const auto& comp : fit.theta.components()) {
        summary.min_eigenvalue = std::min(
            summary.min_eigenvalue, comp.eigenvalues()(comp.dimension() - 1));
      }
      fits[static_cast<std::size_t>(index)] = std::move(fit);
    } catch (const std::exception& e) {
      summary.ok = false;
      summary.error = e.what();
    }
  };

  const int jobs = std::min(cfg.jobs, n_starts);
  if (jobs <= 1) {
    for (int index = 0; index < n_starts; ++index) run_start(index);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&]() {
        for (;;) {
          const int index = next.fetch_add(1);
          if (index >= n_starts) return;
          run_start(index);
        }
      });
    }
    for (auto& worker : workers) worker.join();
  }

  // Pure reduction over the indexed results; execution order is irrelevant.
  int best = -1;
  for (int index = 0; index < n_starts; ++index) {
    if (!summaries[static_cast<std::size_t>(index)].ok) continue;
    if (best < 0 || summaries[static_cast<std::size_t>(index)].loglik >
                        summaries[static_cast<std::size_t>(best)].loglik) {
      best = index;
    }
  }
  if (best < 0) {
    std::ostringstream message;
    message << "all " << n_starts << " starts failed:";
    for (const auto& summary : summaries) {
      message << " [start " << summary.index << ": " << summary.error << "]";
    }
    throw MultistartError(message.str());
  }

  MultistartResult result{std::move(*fits[static_cast<std::size_t>(best)]),
                          best, std::move(summaries)};
  return result;
}

}  // namespace rimle

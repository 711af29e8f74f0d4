#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "rimle/data_io.hpp"
#include "rimle/evaluation.hpp"

namespace py = pybind11;

namespace {

rimle::EmConfig make_config(int n_components, std::optional<double> log_delta,
                            std::optional<double> delta, double gamma,
                            double pi_max, double tol, int max_iter,
                            int n_starts, std::uint64_t seed, int jobs) {
  if (log_delta && delta) {
    throw rimle::InputError("pass either log_delta or delta, not both");
  }
  rimle::EmConfig cfg;
  if (log_delta) {
    cfg.icd = rimle::IcdValue::from_log(*log_delta);
  } else if (delta) {
    cfg.icd = rimle::IcdValue::from_delta(*delta);
  }
  cfg.n_components = n_components;
  cfg.constraints.gamma = gamma;
  cfg.constraints.pi_max = pi_max;
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  cfg.n_starts = n_starts;
  cfg.seed = seed;
  cfg.jobs = jobs;
  return cfg;
}

py::dict fit_to_dict(const rimle::FitResult& fit) {
  py::dict out;
  out["noise_weight"] = fit.theta.noise_weight();
  out["weights"] = fit.theta.weights();
  py::list means;
  py::list covariances;
  for (const auto& comp : fit.theta.components()) {
    means.append(comp.mean());
    covariances.append(comp.covariance());
  }
  out["means"] = means;
  out["covariances"] = covariances;
  out["loglik"] = fit.loglik;
  out["iterations"] = fit.iterations;
  out["converged"] = fit.converged;
  out["assignments"] = fit.assignments;
  out["noise_proportion"] = fit.noise_proportion;
  return out;
}

}  // namespace

PYBIND11_MODULE(rimle, m) {
  m.doc() =
      "Robust model-based clustering: Gaussian mixtures plus an improper "
      "uniform noise component, fitted by a constrained EM algorithm";

  py::register_exception<rimle::Error>(m, "RimleError");

  m.def(
      "fit",
      [](const Eigen::MatrixXd& data, int n_components,
         std::optional<double> log_delta, std::optional<double> delta,
         double gamma, double pi_max, double tol, int max_iter, int n_starts,
         std::uint64_t seed, int jobs, bool mad) {
        rimle::DataMatrix matrix{data};
        if (mad) matrix = rimle::mad_standardize(matrix);
        const rimle::EmConfig cfg =
            make_config(n_components, log_delta, delta, gamma, pi_max, tol,
                        max_iter, n_starts, seed, jobs);
        const rimle::MultistartResult fitted =
            rimle::multistart_fit(matrix, cfg);
        py::dict out = fit_to_dict(fitted.best);
        if (matrix.column_scales()) {
          out["column_scales"] = *matrix.column_scales();
        }
        return out;
      },
      py::arg("data"), py::arg("n_components"),
      py::arg("log_delta") = py::none(), py::arg("delta") = py::none(),
      py::arg("gamma") = 100.0, py::arg("pi_max") = 0.5, py::arg("tol") = 1e-8,
      py::arg("max_iter") = 1000, py::arg("n_starts") = 30, py::arg("seed") = 0,
      py::arg("jobs") = 1, py::arg("mad_standardize") = false,
      "Multistart constrained EM fit; rows of `data` are observations. "
      "Returns a dict with the fitted parameters, per-point assignments "
      "(0 = noise) and convergence metadata.");

  m.def(
      "adjusted_rand",
      [](const std::vector<int>& a, const std::vector<int>& b) {
        return rimle::adjusted_rand(a, b);
      },
      py::arg("labels_a"), py::arg("labels_b"),
      "Hubert-Arabie adjusted Rand index between two labelings.");

  m.def(
      "mad_standardize",
      [](const Eigen::MatrixXd& data) {
        const rimle::DataMatrix out =
            rimle::mad_standardize(rimle::DataMatrix{data});
        return py::make_tuple(out.values(), *out.column_scales());
      },
      py::arg("data"),
      "Divides each column by its median absolute deviation from the "
      "column median; returns (standardized, scales).");

  m.def(
      "delta_scan",
      [](const Eigen::MatrixXd& data, int n_components,
         std::optional<std::vector<double>> grid, double gamma, double pi_max,
         double tol, int max_iter, int n_starts, std::uint64_t seed, int jobs,
         std::optional<std::vector<int>> reference_labels) {
        rimle::EmConfig cfg = make_config(n_components, {}, {}, gamma, pi_max,
                                          tol, max_iter, n_starts, seed, jobs);
        const std::vector<rimle::DeltaScanRow> rows = rimle::delta_scan(
            rimle::DataMatrix{data}, cfg,
            grid ? *grid : rimle::default_log_delta_grid(), reference_labels);
        py::list out;
        for (const auto& row : rows) {
          py::dict entry;
          entry["log_delta"] = row.log_delta;
          if (row.error.empty()) {
            entry["loglik"] = row.loglik;
            entry["noise_proportion"] = row.noise_proportion;
            entry["converged"] = row.converged;
            entry["iterations"] = row.iterations;
            if (row.ari) entry["ari"] = *row.ari;
          } else {
            entry["error"] = row.error;
          }
          out.append(entry);
        }
        return out;
      },
      py::arg("data"), py::arg("n_components"), py::arg("grid") = py::none(),
      py::arg("gamma") = 100.0, py::arg("pi_max") = 0.5, py::arg("tol") = 1e-8,
      py::arg("max_iter") = 1000, py::arg("n_starts") = 30, py::arg("seed") = 0,
      py::arg("jobs") = 1, py::arg("reference_labels") = py::none(),
      "Fits once per grid value of log(delta) with shared seeds and returns "
      "one dict per grid point.");
}

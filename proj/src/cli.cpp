#include "rimle/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rimle/data_io.hpp"
#include "rimle/evaluation.hpp"

namespace rimle::cli {

namespace {

struct CommonOptions {
  std::string input;
  std::string output;
  int n_components = 1;
  std::optional<double> log_delta;
  std::optional<double> delta;
  EmConfig defaults{};
  double gamma = defaults.constraints.gamma;
  double pi_max = defaults.constraints.pi_max;
  double tol = defaults.tol;
  int max_iter = defaults.max_iter;
  int n_starts = defaults.n_starts;
  std::uint64_t seed = defaults.seed;
  int jobs = defaults.jobs;
  bool mad = false;
  bool header = false;
  std::string delimiter = ",";

  EmConfig to_config() const {
    EmConfig cfg;
    if (log_delta) {
      cfg.icd = IcdValue::from_log(*log_delta);
    } else if (delta) {
      cfg.icd = IcdValue::from_delta(*delta);
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

  char delimiter_char() const {
    if (delimiter.size() != 1) {
      throw InputError("--delimiter must be a single character");
    }
    return delimiter.front();
  }
};

void add_data_flags(CLI::App* cmd, CommonOptions& opt, bool with_output) {
  cmd->add_option("--input", opt.input, "Input CSV file")->required();
  if (with_output) {
    cmd->add_option("--output", opt.output, "Output file");
  }
  cmd->add_flag("--mad-standardize", opt.mad,
                "Divide each column by its median absolute deviation");
  cmd->add_flag("--header", opt.header, "Skip the first input line");
  cmd->add_option("--delimiter", opt.delimiter, "Cell delimiter")
      ->default_val(",");
}

void add_fit_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--g", opt.n_components, "Number of Gaussian components")
      ->required();
  auto* log_delta = cmd->add_option(
      "--log-delta", opt.log_delta,
      "Natural log of the improper constant density");
  cmd->add_option("--delta", opt.delta, "Improper constant density")
      ->excludes(log_delta);
  cmd->add_option("--gamma", opt.gamma, "Eigenvalue ratio bound")
      ->default_val(opt.gamma);
  cmd->add_option("--pi-max", opt.pi_max, "Noise proportion cap")
      ->default_val(opt.pi_max);
  cmd->add_option("--tol", opt.tol, "Log-likelihood convergence tolerance")
      ->default_val(opt.tol);
  cmd->add_option("--max-iter", opt.max_iter, "Iteration cap per start")
      ->default_val(opt.max_iter);
  cmd->add_option("--starts", opt.n_starts, "Number of multistart runs")
      ->default_val(opt.n_starts);
  cmd->add_option("--seed", opt.seed, "Random seed")->default_val(opt.seed);
  cmd->add_option("--jobs", opt.jobs, "Concurrent starts")
      ->default_val(opt.jobs);
}

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> values;
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw InputError("invalid " + what + " entry '" + token + "'");
    }
  }
  if (values.empty()) throw InputError(what + " list is empty");
  return values;
}

std::string format_number(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  std::string text(buffer);
  if (text.find('.') == std::string::npos &&
      text.find('e') == std::string::npos &&
      text.find("inf") == std::string::npos &&
      text.find("nan") == std::string::npos) {
    text += ".0";
  }
  return text;
}

SyntheticSpec spec_from_json_file(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) throw InputError("cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    stream >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid simulation spec: ") + e.what(), 0, 0);
  }
  SyntheticSpec spec;
  spec.n = j.at("n").get<Eigen::Index>();
  spec.p = j.at("p").get<Eigen::Index>();
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.noise_fraction = j.value("noise_fraction", 0.0);
  if (j.contains("noise_box")) {
    for (const auto& pair : j.at("noise_box")) {
      spec.noise_box.emplace_back(pair.at(0).get<double>(),
                                  pair.at(1).get<double>());
    }
  }
  for (const auto& comp : j.value("components", nlohmann::json::array())) {
    SyntheticSpec::Component c;
    c.weight = comp.at("weight").get<double>();
    const auto& mean = comp.at("mean");
    c.mean.resize(static_cast<Eigen::Index>(mean.size()));
    for (std::size_t k = 0; k < mean.size(); ++k) {
      c.mean(static_cast<Eigen::Index>(k)) = mean[k].get<double>();
    }
    const auto& cov = comp.at("covariance");
    c.covariance.resize(static_cast<Eigen::Index>(cov.size()),
                        static_cast<Eigen::Index>(cov.at(0).size()));
    for (std::size_t a = 0; a < cov.size(); ++a) {
      for (std::size_t b = 0; b < cov[a].size(); ++b) {
        c.covariance(static_cast<Eigen::Index>(a),
                     static_cast<Eigen::Index>(b)) = cov[a][b].get<double>();
      }
    }
    spec.components.push_back(std::move(c));
  }
  return spec;
}

int run_fit(const CommonOptions& opt, const std::string& labels_output,
            const std::string& format_name, std::ostream& out,
            std::ostream& err) {
  std::string stage = "setup";
  try {
    stage = "read";
    DataMatrix data =
        read_matrix_file(opt.input, opt.header, opt.delimiter_char());
    if (opt.mad) {
      stage = "standardize";
      data = mad_standardize(data);
    }
    stage = "fit";
    const EmConfig cfg = opt.to_config();
    const MultistartResult fitted = multistart_fit(data, cfg);
    stage = "write";
    if (!opt.output.empty()) {
      const ResultFormat format = format_name == "labels"
                                      ? ResultFormat::labels_only
                                      : ResultFormat::structured;
      write_result_file(fitted.best, cfg, data.column_scales(), opt.output,
                        format);
    }
    if (!labels_output.empty()) {
      write_labels_file(fitted.best.assignments, labels_output);
    }
    out << "loglik=" << format_number(fitted.best.loglik)
        << " iterations=" << fitted.best.iterations
        << " converged=" << (fitted.best.converged ? "true" : "false")
        << " noise_proportion=" << format_number(fitted.best.noise_proportion)
        << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << stage << ": " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run_scan(const CommonOptions& opt, const std::string& grid_text,
             const std::string& reference_path, std::ostream& out,
             std::ostream& err) {
  std::string stage = "setup";
  try {
    stage = "read";
    DataMatrix data =
        read_matrix_file(opt.input, opt.header, opt.delimiter_char());
    if (opt.mad) {
      stage = "standardize";
      data = mad_standardize(data);
    }
    std::optional<std::vector<int>> reference;
    if (!reference_path.empty()) {
      reference = read_labels_file(reference_path);
    }
    stage = "scan";
    const std::vector<double> grid =
        grid_text.empty() ? default_log_delta_grid()
                          : parse_double_list(grid_text, "grid");
    const EmConfig cfg = opt.to_config();
    const std::vector<DeltaScanRow> rows =
        delta_scan(data, cfg, grid, reference);
    stage = "write";
    const std::string csv = delta_scan_csv(rows);
    if (opt.output.empty()) {
      out << csv;
    } else {
      std::ofstream file(opt.output);
      if (!file) throw InputError("cannot open '" + opt.output + "'");
      file << csv;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << stage << ": " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run_simulate(const std::string& spec_path, const std::string& output,
                 const std::string& labels_output,
                 const std::optional<std::uint64_t>& seed_override,
                 std::ostream& out, std::ostream& err) {
  std::string stage = "setup";
  try {
    stage = "read";
    SyntheticSpec spec = spec_from_json_file(spec_path);
    if (seed_override) spec.seed = *seed_override;
    stage = "simulate";
    const auto [data, labels] = generate_mixture(spec);
    stage = "write";
    write_matrix_file(data.values(), output);
    if (!labels_output.empty()) write_labels_file(labels, labels_output);
    out << "n=" << data.n() << " p=" << data.p() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << stage << ": " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run_breakdown(const CommonOptions& opt, int r,
                  const std::string& magnitudes_text, std::ostream& out,
                  std::ostream& err) {
  std::string stage = "setup";
  try {
    stage = "read";
    DataMatrix data =
        read_matrix_file(opt.input, opt.header, opt.delimiter_char());
    if (opt.mad) {
      stage = "standardize";
      data = mad_standardize(data);
    }
    stage = "breakdown";
    const std::vector<double> magnitudes =
        parse_double_list(magnitudes_text, "magnitudes");
    const EmConfig cfg = opt.to_config();
    const std::vector<BreakdownReport> reports =
        breakdown_experiment(data, cfg, r, magnitudes);
    stage = "write";
    const std::string csv = breakdown_csv(reports);
    if (opt.output.empty()) {
      out << csv;
    } else {
      std::ofstream file(opt.output);
      if (!file) throw InputError("cannot open '" + opt.output + "'");
      file << csv;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << stage << ": " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run_ari(const std::string& path_a, const std::string& path_b,
            std::ostream& out, std::ostream& err) {
  std::string stage = "read";
  try {
    const std::vector<int> a = read_labels_file(path_a);
    const std::vector<int> b = read_labels_file(path_b);
    stage = "ari";
    out << format_number(adjusted_rand(a, b)) << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << stage << ": " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Robust model-based clustering via an improper uniform noise "
               "component"};
  app.require_subcommand(1);

  CommonOptions fit_opt;
  std::string fit_labels_output;
  std::string fit_format = "structured";
  auto* fit = app.add_subcommand("fit", "Fit the mixture to a dataset");
  add_data_flags(fit, fit_opt, true);
  add_fit_flags(fit, fit_opt);
  fit->add_option("--labels-output", fit_labels_output,
                  "Write hard assignments, one label per line");
  fit->add_option("--format", fit_format, "Output format")
      ->check(CLI::IsMember({"structured", "labels"}))
      ->default_val("structured");

  CommonOptions scan_opt;
  std::string scan_grid;
  std::string scan_reference;
  auto* scan = app.add_subcommand(
      "scan", "Fit across a grid of log improper density values");
  add_data_flags(scan, scan_opt, true);
  add_fit_flags(scan, scan_opt);
  scan->add_option("--grid", scan_grid,
                   "Comma-separated log delta values (default: -200,-100,-50,"
                   "-20..-3)");
  scan->add_option("--reference-labels", scan_reference,
                   "Labels for the adjusted Rand column");

  std::string sim_spec;
  std::string sim_output;
  std::string sim_labels;
  std::optional<std::uint64_t> sim_seed;
  auto* simulate =
      app.add_subcommand("simulate", "Draw a synthetic mixture sample");
  simulate->add_option("--spec", sim_spec, "JSON simulation spec")->required();
  simulate->add_option("--output", sim_output, "Output CSV file")->required();
  simulate->add_option("--labels-output", sim_labels,
                       "Write the true labels, one per line");
  simulate->add_option("--seed", sim_seed, "Override the spec seed");

  CommonOptions bd_opt;
  int bd_r = 0;
  std::string bd_magnitudes;
  auto* breakdown = app.add_subcommand(
      "breakdown", "Probe robustness against planted outliers");
  add_data_flags(breakdown, bd_opt, true);
  add_fit_flags(breakdown, bd_opt);
  breakdown->add_option("--r", bd_r, "Number of added outliers")->required();
  breakdown->add_option("--magnitudes", bd_magnitudes,
                        "Comma-separated outlier magnitudes")
      ->required();

  std::string ari_a;
  std::string ari_b;
  auto* ari = app.add_subcommand(
      "ari", "Adjusted Rand index between two label files");
  ari->add_option("labels_a", ari_a, "First label file")->required();
  ari->add_option("labels_b", ari_b, "Second label file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage: " << e.what() << '\n';
    return kExitUsage;
  }

  if (fit->parsed()) {
    return run_fit(fit_opt, fit_labels_output, fit_format, out, err);
  }
  if (scan->parsed()) {
    return run_scan(scan_opt, scan_grid, scan_reference, out, err);
  }
  if (simulate->parsed()) {
    return run_simulate(sim_spec, sim_output, sim_labels, sim_seed, out, err);
  }
  if (breakdown->parsed()) {
    return run_breakdown(bd_opt, bd_r, bd_magnitudes, out, err);
  }
  if (ari->parsed()) {
    return run_ari(ari_a, ari_b, out, err);
  }
  err << "usage: no subcommand selected\n";
  return kExitUsage;
}

}  // namespace rimle::cli

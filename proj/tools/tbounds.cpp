// tbounds: estimate identification intervals for a treatment effect
// transported from an RCT location to a covariates-only target location.
//
// Subcommands:
//   simulate  write a synthetic source/target/oracle CSV triple
//   estimate  per-gamma bounds table for a dataset pair
//   sweep     long-format table for plotting, one row per
//             (gamma, estimator, bound side)
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 solver error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "transport/transport.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace transport;

namespace {

constexpr double kBalanceTol = 1e-8;
constexpr double kLpEqualityTol = 1e-6;
constexpr double kLpEqualityTolMax = 1e-3;

struct EstimateConfig {
  std::string source_path;
  std::string target_path;
  std::string basis = "identity";
  std::vector<double> gamma_grid = {0.0};  // log-scale values
  double m = 1.0;
  int bootstrap = 0;
  double level = 0.95;
  std::uint64_t seed = 0;
  double propensity = 0.5;
  int threads = 0;
  std::string out_dir;
};

struct SimulateConfig {
  std::string setup = "A";
  int n_total = 1000;
  std::uint64_t seed = 0;
  std::string out_dir;
  // custom overrides
  double gamma_star = 1.0;
  double alpha0 = 0.0;
  std::vector<double> mu = {0, 0, 0, 0};
  std::vector<double> beta = {0, 0, 0, 0};
  double sigma = 1.0;
  std::string covariate_law = "uniform";
};

json tolerances_json() {
  return json{{"balance_tol", kBalanceTol},
              {"lp_equality_tol", kLpEqualityTol},
              {"lp_equality_tol_max", kLpEqualityTolMax},
              {"percentile", "type-7"}};
}

void write_json(const std::string& path, const json& j) {
  csv::write_file(path, j.dump(2) + "\n");
}

struct GammaRow {
  double gamma = 0.0;  // log scale
  BoundsResult unbalanced;
  BoundsResult balanced;
  std::optional<BootstrapResult> unbalanced_boot;
  std::optional<BootstrapResult> balanced_boot;
};

std::vector<GammaRow> compute_rows(const SourceDataset& src, const TargetDataset& tgt,
                                   const BasisSpec& spec, const DensityRatioFit& f,
                                   const EstimateConfig& cfg) {
  const std::vector<double> rhat = weights(f, src, spec);

  std::vector<double> grid(cfg.gamma_grid);
  std::sort(grid.begin(), grid.end());

  std::vector<GammaRow> rows;
  for (double g : grid) {
    GammaRow row;
    row.gamma = g;
    const SensitivityParams sens{std::exp(g), cfg.m};
    row.unbalanced = solve_unbalanced(src, rhat, sens);
    row.balanced = solve_balanced(src, tgt, f, spec, sens);
    if (cfg.bootstrap > 0) {
      BootstrapOptions opts;
      opts.n_resamples = cfg.bootstrap;
      opts.level = cfg.level;
      opts.seed = cfg.seed;  // shared substreams: one resample set for every cell
      opts.threads = cfg.threads;
      row.unbalanced_boot =
          bootstrap_bounds(src, tgt, spec, sens, BoundsEstimator::unbalanced, opts);
      row.balanced_boot =
          bootstrap_bounds(src, tgt, spec, sens, BoundsEstimator::balanced, opts);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_balance(const std::string& path, const DensityRatioFit& f, const SourceDataset& src,
                   const TargetDataset& tgt, const BasisSpec& spec) {
  std::ostringstream out;
  out << "arm,feature,weighted_source_mean,target_mean,residual,pass\n";
  for (const auto& row : balance_report(f, src, tgt, spec, kBalanceTol)) {
    out << (row.arm == 1 ? "treated" : "control") << "," << row.feature << ","
        << csv::format_double(row.weighted_source_mean) << ","
        << csv::format_double(row.target_mean) << "," << csv::format_double(row.residual) << ","
        << (row.pass ? "1" : "0") << "\n";
  }
  csv::write_file(path, out.str());
}

void write_bounds_table(const std::string& path, const std::vector<GammaRow>& rows,
                        bool bootstrap) {
  std::ostringstream out;
  out << "gamma,unbalanced_lower,unbalanced_upper,balanced_lower,balanced_upper";
  if (bootstrap)
    out << ",unbalanced_ci_lo,unbalanced_ci_hi,balanced_ci_lo,balanced_ci_hi";
  out << "\n";
  for (const auto& r : rows) {
    out << csv::format_double(r.gamma) << "," << csv::format_double(r.unbalanced.lower) << ","
        << csv::format_double(r.unbalanced.upper) << "," << csv::format_double(r.balanced.lower)
        << "," << csv::format_double(r.balanced.upper);
    if (bootstrap) {
      out << "," << csv::format_double(r.unbalanced_boot->lower_ci) << ","
          << csv::format_double(r.unbalanced_boot->upper_ci) << ","
          << csv::format_double(r.balanced_boot->lower_ci) << ","
          << csv::format_double(r.balanced_boot->upper_ci);
    }
    out << "\n";
  }
  csv::write_file(path, out.str());
}

void write_sweep_table(const std::string& path, const std::vector<GammaRow>& rows,
                       bool bootstrap, double level) {
  std::ostringstream out;
  out << "gamma,estimator,side,value";
  if (bootstrap) out << ",ci_lo,ci_hi";
  out << "\n";
  const double alpha = 1.0 - level;
  for (const auto& r : rows) {
    // Sorted: gamma ascending, then estimator name, then bound side.
    struct Entry {
      const char* estimator;
      const char* side;
      double value;
      const std::vector<double>* reps;
    };
    const Entry entries[4] = {
        {"balanced", "lower", r.balanced.lower,
         r.balanced_boot ? &r.balanced_boot->replicates_lower : nullptr},
        {"balanced", "upper", r.balanced.upper,
         r.balanced_boot ? &r.balanced_boot->replicates_upper : nullptr},
        {"unbalanced", "lower", r.unbalanced.lower,
         r.unbalanced_boot ? &r.unbalanced_boot->replicates_lower : nullptr},
        {"unbalanced", "upper", r.unbalanced.upper,
         r.unbalanced_boot ? &r.unbalanced_boot->replicates_upper : nullptr},
    };
    for (const auto& e : entries) {
      out << csv::format_double(r.gamma) << "," << e.estimator << "," << e.side << ","
          << csv::format_double(e.value);
      if (bootstrap) {
        out << "," << csv::format_double(percentile_type7(*e.reps, alpha / 2.0)) << ","
            << csv::format_double(percentile_type7(*e.reps, 1.0 - alpha / 2.0));
      }
      out << "\n";
    }
  }
  csv::write_file(path, out.str());
}

json statuses_json(const std::vector<GammaRow>& rows) {
  json statuses = json::array();
  for (const auto& r : rows) {
    statuses.push_back(json{{"gamma", r.gamma},
                            {"unbalanced", to_string(r.unbalanced.status)},
                            {"balanced", to_string(r.balanced.status)}});
  }
  return statuses;
}

int run_estimate(const EstimateConfig& cfg, bool long_format) {
  const SourceDataset src = csv::read_source(cfg.source_path, cfg.propensity);
  const TargetDataset tgt = csv::read_target(cfg.target_path);
  const auto report = validate_pair(src, tgt);
  for (const auto& issue : report)
    if (issue.severity == Severity::warning) std::cerr << "warning: " << issue.message << "\n";
  if (!passed(report)) {
    for (const auto& issue : report)
      if (issue.severity == Severity::error) std::cerr << "error: " << issue.message << "\n";
    return 2;
  }

  const BasisSpec spec = parse_basis(cfg.basis, src.dim());
  fs::create_directories(cfg.out_dir);
  const DensityRatioFit f = fit(src, tgt, spec, FitOptions{});
  if (!f.converged())
    throw SolverError("density ratio fit did not converge; residual treated " +
                      std::to_string(linalg::max_abs(f.treated.balance_residual)) +
                      ", control " +
                      std::to_string(linalg::max_abs(f.control.balance_residual)));
  const auto rows = compute_rows(src, tgt, spec, f, cfg);
  write_balance((fs::path(cfg.out_dir) / "balance.csv").string(), f, src, tgt, spec);
  if (long_format) {
    write_sweep_table((fs::path(cfg.out_dir) / "sweep.csv").string(), rows, cfg.bootstrap > 0,
                      cfg.level);
  } else {
    write_bounds_table((fs::path(cfg.out_dir) / "bounds.csv").string(), rows,
                       cfg.bootstrap > 0);
  }

  json manifest{{"tool", "tbounds"},
                {"version", version},
                {"command", long_format ? "sweep" : "estimate"},
                {"source", cfg.source_path},
                {"target", cfg.target_path},
                {"n0", src.units.size()},
                {"n1", tgt.units.size()},
                {"d", src.dim()},
                {"propensity", cfg.propensity},
                {"basis", cfg.basis},
                {"gamma_grid", cfg.gamma_grid},
                {"m", cfg.m},
                {"bootstrap", cfg.bootstrap},
                {"level", cfg.level},
                {"seed", cfg.seed},
                {"substream_rule", "replicate k uses substream_seed(seed, k)"},
                {"tolerances", tolerances_json()},
                {"statuses", statuses_json(rows)}};
  write_json((fs::path(cfg.out_dir) / "manifest.json").string(), manifest);
  for (const auto& r : rows) {
    if (r.unbalanced.status != SolverStatus::optimal ||
        r.balanced.status != SolverStatus::optimal)
      std::cerr << "warning: gamma " << r.gamma << " solved with relaxed tolerance\n";
  }
  return 0;
}

int run_simulate(const SimulateConfig& cfg) {
  DgpConfig dgp;
  if (cfg.setup == "A") {
    dgp = DgpConfig::setup_a(cfg.seed, cfg.n_total);
  } else if (cfg.setup == "B") {
    dgp = DgpConfig::setup_b(cfg.seed, cfg.n_total);
  } else {
    dgp.setup = DgpSetup::custom;
    dgp.n_total = cfg.n_total;
    dgp.seed = cfg.seed;
    dgp.gamma_star = cfg.gamma_star;
    dgp.alpha0 = cfg.alpha0;
    if (cfg.mu.size() != 4 || cfg.beta.size() != 4)
      throw DataError("custom setup needs exactly 4 values for --mu and --beta-coef");
    std::copy(cfg.mu.begin(), cfg.mu.end(), dgp.mu.begin());
    std::copy(cfg.beta.begin(), cfg.beta.end(), dgp.beta.begin());
    dgp.sigma = cfg.sigma;
    if (cfg.covariate_law == "beta")
      dgp.covariate_law = CovariateLaw::beta_half_half;
    else if (cfg.covariate_law == "uniform")
      dgp.covariate_law = CovariateLaw::uniform01;
    else
      throw DataError("unknown covariate law '" + cfg.covariate_law + "'");
  }
  if (!dgp.valid()) throw DataError("invalid simulation parameters");

  const SimulatedPopulation pop = generate(dgp);
  const SplitResult parts = split(pop);  // throws with advice when a location is empty

  fs::create_directories(cfg.out_dir);
  csv::write_source((fs::path(cfg.out_dir) / "source.csv").string(), parts.source);
  csv::write_target((fs::path(cfg.out_dir) / "target.csv").string(), parts.target);
  csv::write_oracle((fs::path(cfg.out_dir) / "oracle.csv").string(), pop);

  json manifest{{"tool", "tbounds"},
                {"version", version},
                {"command", "simulate"},
                {"setup", cfg.setup},
                {"n_total", dgp.n_total},
                {"seed", dgp.seed},
                {"gamma_star", dgp.gamma_star},
                {"alpha0", dgp.alpha0},
                {"mu", dgp.mu},
                {"beta", dgp.beta},
                {"sigma", dgp.sigma},
                {"covariate_law",
                 dgp.covariate_law == CovariateLaw::beta_half_half ? "beta(0.5,0.5)^4"
                                                                   : "uniform[0,1]^4"},
                {"propensity", 0.5},
                {"n0", parts.source.units.size()},
                {"n1", parts.target.units.size()},
                {"target_tau_mean", parts.oracle.target_tau_mean}};
  write_json((fs::path(cfg.out_dir) / "manifest.json").string(), manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Treatment-effect transport bounds under a marginal sensitivity model"};
  app.set_version_flag("--version", std::string("tbounds ") + version);
  app.fallthrough();
  app.set_config("--config", "", "key=value file with a [subcommand] section");
  app.require_subcommand(1);

  EstimateConfig est;
  SimulateConfig sim_cfg;

  auto add_estimate_flags = [&](CLI::App* cmd) {
    cmd->configurable();
    cmd->add_option("--source", est.source_path, "source CSV (x1..xd,w,y)")->required();
    cmd->add_option("--target", est.target_path, "target CSV (x1..xd)")->required();
    cmd->add_option("--basis", est.basis, "identity or poly:k")->capture_default_str();
    cmd->add_option("--gamma-grid", est.gamma_grid,
                    "comma-separated log-scale sensitivity values, all >= 0")
        ->delimiter(',')
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--m", est.m, "misspecification multiplier M >= 1")
        ->check(CLI::Range(1.0, 1e12))
        ->capture_default_str();
    cmd->add_option("--bootstrap", est.bootstrap, "bootstrap resamples (0 = off)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--level", est.level, "confidence level in (0,1)")
        ->check(CLI::Range(1e-6, 1.0 - 1e-6))
        ->capture_default_str();
    cmd->add_option("--seed", est.seed, "bootstrap seed")->capture_default_str();
    cmd->add_option("--propensity", est.propensity, "known P(W=1) in the source RCT")
        ->check(CLI::Range(1e-12, 1.0 - 1e-12))
        ->capture_default_str();
    cmd->add_option("--threads", est.threads, "bootstrap threads (0 = hardware)")
        ->capture_default_str();
    cmd->add_option("--out", est.out_dir, "output directory")->required();
  };

  CLI::App* estimate = app.add_subcommand("estimate", "per-gamma bounds table");
  add_estimate_flags(estimate);
  CLI::App* sweep = app.add_subcommand("sweep", "long-format table for plotting");
  add_estimate_flags(sweep);

  CLI::App* simulate = app.add_subcommand("simulate", "write a synthetic dataset triple");
  simulate->configurable();
  simulate->add_option("--setup", sim_cfg.setup, "A, B, or custom")
      ->check(CLI::IsMember({"A", "B", "custom"}))
      ->capture_default_str();
  simulate->add_option("--n-total", sim_cfg.n_total, "combined units across locations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--seed", sim_cfg.seed, "generator seed")->capture_default_str();
  simulate->add_option("--out", sim_cfg.out_dir, "output directory")->required();
  simulate->add_option("--gamma-star", sim_cfg.gamma_star, "custom: true Gamma* >= 1")
      ->check(CLI::Range(1.0, 1e12));
  simulate->add_option("--alpha0", sim_cfg.alpha0, "custom: location intercept");
  simulate->add_option("--mu", sim_cfg.mu, "custom: 4 location coefficients")->delimiter(',');
  simulate->add_option("--beta-coef", sim_cfg.beta, "custom: 4 outcome coefficients")
      ->delimiter(',');
  simulate->add_option("--sigma", sim_cfg.sigma, "custom: outcome noise sd > 0")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--covariate-law", sim_cfg.covariate_law, "custom: beta or uniform")
      ->check(CLI::IsMember({"beta", "uniform"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim_cfg);
    if (estimate->parsed()) return run_estimate(est, false);
    return run_estimate(est, true);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

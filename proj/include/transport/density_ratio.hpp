#pragma once

// Covariate-balancing density ratio estimator.
//
// For each treatment arm w, solve
//     minimize_beta  (1/n_w) sum_{i in arm w} exp(phi(X_i)' beta) - cbar' beta
// where cbar is the target-location feature mean. The objective is smooth and
// convex; its gradient is the arm's weighted feature mean minus cbar, so a
// converged fit balances every feature moment by construction. The log
// density ratio estimate at a source unit is phi(X_i)' beta_hat of its arm,
// and exp of it is the transport weight.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "transport/basis.hpp"
#include "transport/dataset.hpp"
#include "transport/errors.hpp"
#include "transport/linalg.hpp"

namespace transport {

struct FitOptions {
  double balance_tol = 1e-8;   // max-norm of the balance residual at exit
  int max_iterations = 200;
  double hessian_condition_limit = 1e12;  // beyond this, take a gradient step
  double separation_beta_limit = 1e6;     // diverging |beta| => separation
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  // Below this step size the Armijo decrease sits under the floating-point
  // resolution of the objective, so the raw Newton step is taken instead.
  double newton_polish_step = 1e-5;
};

/// Per-arm fit outcome. `balance_residual` is the objective gradient at the
/// returned coefficients: weighted arm feature mean minus target feature mean.
struct ArmFit {
  std::vector<double> beta;
  std::vector<double> balance_residual;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct DensityRatioFit {
  ArmFit treated;
  ArmFit control;
  std::vector<double> target_feature_mean;  // cbar
  double feature_bound_declared = 0.0;
  double feature_bound_empirical = 0.0;
  bool feature_bound_ok = true;

  bool converged() const { return treated.converged && control.converged; }
};

namespace detail {

struct ArmProblem {
  const FeatureMatrix& phi;             // all source rows
  std::vector<std::size_t> rows;        // indices of this arm's rows
  const std::vector<double>& target_mean;

  double objective(const std::vector<double>& beta) const {
    const std::size_t p = phi.cols;
    double sum = 0.0;
    for (std::size_t r : rows) {
      const double* f = phi.row(r);
      double t = 0.0;
      for (std::size_t j = 0; j < p; ++j) t += f[j] * beta[j];
      sum += std::exp(t);
    }
    double lin = 0.0;
    for (std::size_t j = 0; j < p; ++j) lin += target_mean[j] * beta[j];
    return sum / static_cast<double>(rows.size()) - lin;
  }

  void gradient_hessian(const std::vector<double>& beta, std::vector<double>& grad,
                        linalg::Matrix* hess) const {
    const std::size_t p = phi.cols;
    grad.assign(p, 0.0);
    if (hess) *hess = linalg::Matrix(p, p);
    for (std::size_t r : rows) {
      const double* f = phi.row(r);
      double t = 0.0;
      for (std::size_t j = 0; j < p; ++j) t += f[j] * beta[j];
      const double e = std::exp(t);
      for (std::size_t j = 0; j < p; ++j) grad[j] += e * f[j];
      if (hess)
        for (std::size_t j = 0; j < p; ++j)
          for (std::size_t k = j; k < p; ++k) (*hess)(j, k) += e * f[j] * f[k];
    }
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    for (std::size_t j = 0; j < p; ++j) grad[j] = grad[j] * inv_n - target_mean[j];
    if (hess) {
      for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = j; k < p; ++k) {
          (*hess)(j, k) *= inv_n;
          (*hess)(k, j) = (*hess)(j, k);
        }
    }
  }
};

inline ArmFit fit_arm(const ArmProblem& prob, const FitOptions& opts, const char* arm_name) {
  const std::size_t p = prob.phi.cols;
  ArmFit fit;
  fit.beta.assign(p, 0.0);  // beta = 0 means uniform weights, always in-domain
  fit.objective = prob.objective(fit.beta);

  std::vector<double> grad(p);
  linalg::Matrix hess;
  double grad_step = 1.0;  // grows across accepted pure-gradient steps

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    prob.gradient_hessian(fit.beta, grad, &hess);
    fit.balance_residual = grad;
    fit.iterations = iter;
    if (linalg::max_abs(grad) <= opts.balance_tol) {
      fit.converged = true;
      return fit;
    }

    // Newton direction when the Hessian is safely conditioned, else steepest
    // descent. The eigenvalue check is cheap at these dimensions.
    std::vector<double> dir;
    bool newton = false;
    const auto ev = linalg::symmetric_eigenvalues(hess);
    const double lo = *std::min_element(ev.begin(), ev.end());
    const double hi = *std::max_element(ev.begin(), ev.end());
    if (lo > 0.0 && hi / lo <= opts.hessian_condition_limit) {
      std::vector<double> neg_grad(p);
      for (std::size_t j = 0; j < p; ++j) neg_grad[j] = -grad[j];
      if (auto d = linalg::cholesky_solve(hess, neg_grad)) {
        dir = std::move(*d);
        newton = true;
      }
    }
    if (!newton) {
      dir.assign(p, 0.0);
      for (std::size_t j = 0; j < p; ++j) dir[j] = -grad[j];
    }
    double slope = linalg::dot(grad, dir);
    if (!(slope < 0.0)) {  // numerical safeguard: fall back to steepest descent
      for (std::size_t j = 0; j < p; ++j) dir[j] = -grad[j];
      slope = linalg::dot(grad, dir);
      newton = false;
    }

    if (newton && linalg::max_abs(dir) <= opts.newton_polish_step) {
      for (std::size_t j = 0; j < p; ++j) fit.beta[j] += dir[j];
      fit.objective = prob.objective(fit.beta);
      continue;
    }

    // Backtracking line search (Armijo). Gradient steps reuse and grow the
    // last accepted step so a flat descent direction is traversed quickly.
    double step = newton ? 1.0 : grad_step;
    bool accepted = false;
    std::vector<double> candidate(p);
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      for (std::size_t j = 0; j < p; ++j) candidate[j] = fit.beta[j] + step * dir[j];
      const double obj = prob.objective(candidate);
      if (std::isfinite(obj) && obj <= fit.objective + opts.armijo_c * step * slope) {
        fit.beta = candidate;
        fit.objective = obj;
        accepted = true;
        break;
      }
      step *= opts.backtrack;
    }
    if (!accepted) {
      fit.converged = false;  // stalled; residual diagnostics already stored
      return fit;
    }
    if (!newton) grad_step = std::min(step * 2.0, 1e12);

    if (linalg::max_abs(fit.beta) > opts.separation_beta_limit) {
      std::size_t worst = 0;
      for (std::size_t j = 1; j < p; ++j)
        if (std::abs(fit.beta[j]) > std::abs(fit.beta[worst])) worst = j;
      throw SeparationError(std::string(arm_name) +
                                " arm: feature " + std::to_string(worst) +
                                " separates the locations (objective unbounded below, "
                                "coefficient diverging)",
                            worst);
    }
  }

  prob.gradient_hessian(fit.beta, grad, nullptr);
  fit.balance_residual = grad;
  fit.iterations = opts.max_iterations;
  fit.converged = linalg::max_abs(grad) <= opts.balance_tol;
  return fit;
}

}  // namespace detail

/// Fit the density ratio on both arms against the target feature means.
inline DensityRatioFit fit(const SourceDataset& src, const TargetDataset& tgt,
                           const BasisSpec& spec, const FitOptions& opts = {}) {
  if (src.units.empty() || tgt.units.empty())
    throw DataError("density ratio fit needs nonempty source and target datasets");
  if (src.treated_count() == 0 || src.control_count() == 0)
    throw DataError("density ratio fit needs a nonempty treated and control arm");

  const FeatureMatrix phi_src = expand_dataset(spec, covariate_rows(src));
  const FeatureMatrix phi_tgt = expand_dataset(spec, covariate_rows(tgt));
  const std::size_t p = spec.feature_count();

  std::vector<double> cbar(p, 0.0);
  for (std::size_t i = 0; i < phi_tgt.rows; ++i) {
    const double* f = phi_tgt.row(i);
    for (std::size_t j = 0; j < p; ++j) cbar[j] += f[j];
  }
  for (std::size_t j = 0; j < p; ++j) cbar[j] /= static_cast<double>(phi_tgt.rows);

  std::vector<std::size_t> treated_rows, control_rows;
  for (std::size_t i = 0; i < src.units.size(); ++i)
    (src.units[i].w == 1 ? treated_rows : control_rows).push_back(i);

  DensityRatioFit out;
  out.target_feature_mean = cbar;
  out.feature_bound_declared = spec.bound;
  out.feature_bound_empirical = std::max(phi_src.max_abs, phi_tgt.max_abs);
  out.feature_bound_ok = out.feature_bound_empirical <= spec.bound;
  out.treated = detail::fit_arm({phi_src, std::move(treated_rows), cbar}, opts, "treated");
  out.control = detail::fit_arm({phi_src, std::move(control_rows), cbar}, opts, "control");
  return out;
}

/// Per-unit transport weights exp(ghat(X_i)), in source-unit order.
inline std::vector<double> weights(const DensityRatioFit& fit, const SourceDataset& src,
                                   const BasisSpec& spec) {
  if (!fit.treated.converged || !fit.control.converged)
    throw SolverError("weights requested from a non-converged density ratio fit");
  std::vector<double> out;
  out.reserve(src.units.size());
  for (const auto& u : src.units) {
    const auto f = expand(spec, u.x);
    const auto& beta = (u.w == 1) ? fit.treated.beta : fit.control.beta;
    out.push_back(std::exp(linalg::dot(f, beta)));
  }
  return out;
}

/// One row of the balance diagnostics table.
struct BalanceRow {
  int arm = 0;  // 1 treated, 0 control
  std::size_t feature = 0;
  double weighted_source_mean = 0.0;
  double target_mean = 0.0;
  double residual = 0.0;
  bool pass = false;
};

/// Recompute both sides of the empirical moment condition for each arm and
/// feature, regardless of convergence.
inline std::vector<BalanceRow> balance_report(const DensityRatioFit& fit,
                                              const SourceDataset& src,
                                              const TargetDataset& tgt, const BasisSpec& spec,
                                              double balance_tol = 1e-8) {
  const FeatureMatrix phi_src = expand_dataset(spec, covariate_rows(src));
  const FeatureMatrix phi_tgt = expand_dataset(spec, covariate_rows(tgt));
  const std::size_t p = spec.feature_count();

  std::vector<double> cbar(p, 0.0);
  for (std::size_t i = 0; i < phi_tgt.rows; ++i)
    for (std::size_t j = 0; j < p; ++j) cbar[j] += phi_tgt.row(i)[j];
  for (std::size_t j = 0; j < p; ++j) cbar[j] /= static_cast<double>(phi_tgt.rows);

  std::vector<BalanceRow> rows;
  for (int arm = 1; arm >= 0; --arm) {
    const auto& beta = (arm == 1) ? fit.treated.beta : fit.control.beta;
    std::vector<double> wmean(p, 0.0);
    std::size_t n_arm = 0;
    for (std::size_t i = 0; i < src.units.size(); ++i) {
      if (src.units[i].w != arm) continue;
      ++n_arm;
      const double* f = phi_src.row(i);
      double t = 0.0;
      for (std::size_t j = 0; j < p; ++j) t += f[j] * beta[j];
      const double e = std::exp(t);
      for (std::size_t j = 0; j < p; ++j) wmean[j] += e * f[j];
    }
    for (std::size_t j = 0; j < p; ++j) {
      BalanceRow row;
      row.arm = arm;
      row.feature = j;
      row.weighted_source_mean = n_arm ? wmean[j] / static_cast<double>(n_arm) : 0.0;
      row.target_mean = cbar[j];
      row.residual = row.weighted_source_mean - row.target_mean;
      row.pass = std::abs(row.residual) <= balance_tol;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace transport

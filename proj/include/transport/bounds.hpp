#pragma once

// Identification intervals for the target-location treatment effect.
//
// The no-balance interval optimizes the weighted Hajek contrast over the
// per-unit weight box alone; the optimum is separable and solved in closed
// form. The balanced interval adds the empirical moment equality constraints
// (weighted arm feature means equal target feature means) and is solved as
// two independent linear programs per endpoint, one per arm. The equalities
// are enforced as paired inequalities at a feasibility tolerance, with the
// tolerance doubled on infeasibility up to a hard cap.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "transport/basis.hpp"
#include "transport/dataset.hpp"
#include "transport/density_ratio.hpp"
#include "transport/errors.hpp"
#include "transport/simplex.hpp"

namespace transport {

/// Exact solution of the box-only program. `rhat` holds the per-unit density
/// ratio weights in source-unit order; the weight box is
/// [1/sens.effective_bound(), sens.effective_bound()].
inline BoundsResult solve_unbalanced(const SourceDataset& src, const std::vector<double>& rhat,
                                     const SensitivityParams& sens) {
  if (rhat.size() != src.units.size())
    throw DataError("solve_unbalanced: weight vector length does not match dataset");
  for (double r : rhat)
    if (!(r > 0.0) || !std::isfinite(r))
      throw DataError("solve_unbalanced: weights must be positive and finite");
  if (!sens.valid()) throw DataError("sensitivity parameters must be >= 1");

  const double hi = sens.effective_bound();
  const double lo = 1.0 / hi;
  const double n_t = static_cast<double>(src.treated_count());
  const double n_c = static_cast<double>(src.control_count());
  if (n_t == 0 || n_c == 0) throw DataError("solve_unbalanced: empty arm");

  BoundsResult res;
  res.weights_upper.resize(src.units.size());
  res.weights_lower.resize(src.units.size());
  double upper = 0.0, lower = 0.0;
  for (std::size_t i = 0; i < src.units.size(); ++i) {
    const auto& u = src.units[i];
    const double sign = u.w == 1 ? 1.0 : -1.0;
    const double a = sign * rhat[i] * u.y / (u.w == 1 ? n_t : n_c);
    // Maximize per coordinate; ties at a == 0 keep z = 1 so reported
    // weights are deterministic.
    const double z_up = a > 0.0 ? hi : (a < 0.0 ? lo : 1.0);
    const double z_dn = a > 0.0 ? lo : (a < 0.0 ? hi : 1.0);
    res.weights_upper[i] = z_up;
    res.weights_lower[i] = z_dn;
    upper += a * z_up;
    lower += a * z_dn;
  }
  res.upper = upper;
  res.lower = lower;
  res.status = SolverStatus::optimal;
  return res;
}

/// One arm's linear program: optimize sum_i coefficients[i] * z_i subject to
/// constraint_matrix * z = rhs (within tolerance) and the box.
struct ArmLP {
  std::vector<double> coefficients;     // gamma_i * y_i
  linalg::Matrix constraint_matrix;     // p x n_arm, column i = gamma_i * phi(x_i)
  std::vector<double> rhs;              // target feature means
  double box_lo = 1.0, box_hi = 1.0;
  std::vector<std::size_t> unit_index;  // arm position -> index into src.units
};

enum class Arm { treated, control };
enum class LpDirection { max, min };

inline ArmLP build_arm_lp(const SourceDataset& src, const std::vector<double>& rhat,
                          const std::vector<double>& tgt_feature_mean, const BasisSpec& spec,
                          Arm arm, const SensitivityParams& sens) {
  const int w = arm == Arm::treated ? 1 : 0;
  ArmLP lp;
  lp.rhs = tgt_feature_mean;
  lp.box_hi = sens.effective_bound();
  lp.box_lo = 1.0 / lp.box_hi;
  for (std::size_t i = 0; i < src.units.size(); ++i)
    if (src.units[i].w == w) lp.unit_index.push_back(i);

  const std::size_t n_arm = lp.unit_index.size();
  const std::size_t p = spec.feature_count();
  lp.coefficients.resize(n_arm);
  lp.constraint_matrix = linalg::Matrix(p, n_arm);
  for (std::size_t k = 0; k < n_arm; ++k) {
    const auto& unit = src.units[lp.unit_index[k]];
    const double gamma = rhat[lp.unit_index[k]] / static_cast<double>(n_arm);
    lp.coefficients[k] = gamma * unit.y;
    const auto f = expand(spec, unit.x);
    for (std::size_t j = 0; j < p; ++j) lp.constraint_matrix(j, k) = gamma * f[j];
  }
  return lp;
}

struct LpOptions {
  double equality_tol = 1e-6;      // |lhs - rhs| allowed on each moment row
  double equality_tol_max = 1e-3;  // relaxation cap
};

struct LpSolution {
  double value = 0.0;
  std::vector<double> z;
  SolverStatus status = SolverStatus::optimal;
  std::vector<double> duals;
  double duality_gap = 0.0;
  double equality_tol_used = 0.0;
  int iterations = 0;
};

/// Solve one arm LP. Each equality row a'z = r becomes a'z + s = r + eps with
/// slack s in [0, 2 eps]. If phase 1 fails, eps doubles up to the cap and the
/// result is flagged tolerance-relaxed; past the cap an InfeasibleError
/// carries the smallest constraint violation seen.
inline LpSolution solve_lp(const ArmLP& lp, LpDirection direction, const LpOptions& opts = {}) {
  const std::size_t n = lp.coefficients.size();
  const std::size_t p = lp.rhs.size();
  double infeasibility = std::numeric_limits<double>::infinity();

  double eps = opts.equality_tol;
  for (;;) {
    lp::Problem prob;
    prob.num_vars = n + p;
    prob.num_rows = p;
    prob.objective.assign(n + p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      prob.objective[i] =
          direction == LpDirection::max ? lp.coefficients[i] : -lp.coefficients[i];
    prob.lower.assign(n + p, 0.0);
    prob.upper.assign(n + p, 2.0 * eps);
    for (std::size_t i = 0; i < n; ++i) {
      prob.lower[i] = lp.box_lo;
      prob.upper[i] = lp.box_hi;
    }
    prob.rhs.resize(p);
    for (std::size_t j = 0; j < p; ++j) prob.rhs[j] = lp.rhs[j] + eps;
    prob.cols.assign((n + p) * p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) prob.at(j, i) = lp.constraint_matrix(j, i);
    for (std::size_t j = 0; j < p; ++j) prob.at(j, n + j) = 1.0;

    const lp::Solution sol = lp::maximize(prob);
    if (sol.outcome == lp::Outcome::optimal) {
      LpSolution out;
      out.z.assign(sol.x.begin(), sol.x.begin() + n);
      out.value = 0.0;
      for (std::size_t i = 0; i < n; ++i) out.value += lp.coefficients[i] * out.z[i];
      out.status = eps == opts.equality_tol ? SolverStatus::optimal
                                            : SolverStatus::tolerance_relaxed;
      out.duals = sol.duals;
      if (direction == LpDirection::min)
        for (double& d : out.duals) d = -d;
      out.duality_gap = sol.duality_gap;
      out.equality_tol_used = eps;
      out.iterations = sol.iterations;
      return out;
    }
    if (sol.outcome == lp::Outcome::infeasible) {
      infeasibility = std::min(infeasibility, sol.infeasibility);
      if (eps >= opts.equality_tol_max)
        throw InfeasibleError(
            "balanced LP infeasible even at equality tolerance " + std::to_string(eps) +
                " (residual " + std::to_string(infeasibility) + ")",
            infeasibility);
      eps = std::min(eps * 2.0, opts.equality_tol_max);
      continue;
    }
    throw SolverError("simplex did not terminate (iteration limit)");
  }
}

/// Balanced identification interval: upper = max treated LP - min control LP,
/// lower = min treated LP - max control LP. The two arms' programs share no
/// variables, so the joint optimum splits.
inline BoundsResult solve_balanced(const SourceDataset& src, const TargetDataset& tgt,
                                   const DensityRatioFit& fit, const BasisSpec& spec,
                                   const SensitivityParams& sens, const LpOptions& opts = {}) {
  (void)tgt;  // target enters through the fitted moments
  if (!fit.converged())
    throw SolverError("solve_balanced requires a converged density ratio fit");
  if (!sens.valid()) throw DataError("sensitivity parameters must be >= 1");

  const std::vector<double> rhat = weights(fit, src, spec);
  const ArmLP treated = build_arm_lp(src, rhat, fit.target_feature_mean, spec, Arm::treated, sens);
  const ArmLP control = build_arm_lp(src, rhat, fit.target_feature_mean, spec, Arm::control, sens);

  const LpSolution t_max = solve_lp(treated, LpDirection::max, opts);
  const LpSolution t_min = solve_lp(treated, LpDirection::min, opts);
  const LpSolution c_max = solve_lp(control, LpDirection::max, opts);
  const LpSolution c_min = solve_lp(control, LpDirection::min, opts);

  BoundsResult res;
  res.upper = t_max.value - c_min.value;
  res.lower = t_min.value - c_max.value;
  res.weights_upper.assign(src.units.size(), 1.0);
  res.weights_lower.assign(src.units.size(), 1.0);
  for (std::size_t k = 0; k < treated.unit_index.size(); ++k) {
    res.weights_upper[treated.unit_index[k]] = t_max.z[k];
    res.weights_lower[treated.unit_index[k]] = t_min.z[k];
  }
  for (std::size_t k = 0; k < control.unit_index.size(); ++k) {
    res.weights_upper[control.unit_index[k]] = c_min.z[k];
    res.weights_lower[control.unit_index[k]] = c_max.z[k];
  }
  res.status = SolverStatus::optimal;
  for (const auto* s : {&t_max, &t_min, &c_max, &c_min})
    if (s->status == SolverStatus::tolerance_relaxed) res.status = SolverStatus::tolerance_relaxed;
  return res;
}

}  // namespace transport

#pragma once

// Bounded-variable revised simplex.
//
// Maximizes c'x subject to A x = b and l <= x <= u, where A is dense with
// few rows (the basis matrix stays tiny) and possibly many columns. Phase 1
// drives artificial variables to zero starting from all structural variables
// at their lower bounds; phase 2 optimizes the real objective. Nonbasic
// variables rest at a bound, an entering variable may either replace a basic
// variable or flip to its opposite bound, and the basis is refactorized every
// iteration, which is cheap at these sizes and keeps iterates exact.
//
// Pivoting is deterministic: Dantzig pricing and a minimum-ratio test, both
// with ties broken by lowest variable index (Bland), and a switch to full
// Bland pricing after a fixed iteration budget to rule out cycling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "transport/errors.hpp"
#include "transport/linalg.hpp"

namespace transport::lp {

struct Problem {
  std::size_t num_vars = 0;       // n
  std::size_t num_rows = 0;       // m
  std::vector<double> objective;  // length n
  std::vector<double> lower;      // length n
  std::vector<double> upper;      // length n
  std::vector<double> rhs;        // length m
  std::vector<double> cols;       // column-major A, cols[j * m + i]

  double& at(std::size_t i, std::size_t j) { return cols[j * num_rows + i]; }
  double at(std::size_t i, std::size_t j) const { return cols[j * num_rows + i]; }
};

enum class Outcome { optimal, infeasible, unbounded, iteration_limit };

struct Solution {
  Outcome outcome = Outcome::optimal;
  double objective = 0.0;
  std::vector<double> x;      // structural variables only
  std::vector<double> duals;  // one multiplier per row
  double duality_gap = 0.0;
  double infeasibility = 0.0;  // phase-1 optimum when infeasible
  int iterations = 0;
};

namespace detail {

class SimplexState {
 public:
  explicit SimplexState(const Problem& prob)
      : m_(prob.num_rows), n_(prob.num_vars), total_(prob.num_vars + prob.num_rows) {
    cols_.assign(total_ * m_, 0.0);
    std::copy(prob.cols.begin(), prob.cols.end(), cols_.begin());
    lower_ = prob.lower;
    upper_ = prob.upper;
    lower_.resize(total_, 0.0);
    upper_.resize(total_, std::numeric_limits<double>::infinity());
    b_ = prob.rhs;
    x_.assign(total_, 0.0);
    state_.assign(total_, AT_LOWER);
    basis_.resize(m_);

    // Structural variables start at their lower bounds; each artificial
    // column is +-e_i, signed so its starting value is nonnegative.
    for (std::size_t j = 0; j < n_; ++j) x_[j] = lower_[j];
    std::vector<double> residual(b_);
    for (std::size_t j = 0; j < n_; ++j) {
      if (x_[j] == 0.0) continue;
      for (std::size_t i = 0; i < m_; ++i) residual[i] -= col(j)[i] * x_[j];
    }
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t j = n_ + i;
      col(j)[i] = residual[i] < 0.0 ? -1.0 : 1.0;
      x_[j] = std::abs(residual[i]);
      state_[j] = BASIC;
      basis_[i] = j;
    }
  }

  /// Run the simplex loop for the given costs. Returns optimal,
  /// unbounded, or iteration_limit.
  Outcome run(const std::vector<double>& costs, int max_iterations, int bland_after) {
    bool needs_factor = true;  // bound flips keep basis and duals valid
    for (int iter = 0; iter < max_iterations; ++iter) {
      ++iterations_;
      if (needs_factor) {
        factorize();
        compute_duals(costs);
        needs_factor = false;
      }
      compute_basic_values();

      // Pricing.
      std::size_t entering = total_;
      double best_violation = reduced_cost_tol_;
      const bool bland = iterations_ > bland_after;
      for (std::size_t j = 0; j < total_; ++j) {
        if (state_[j] == BASIC) continue;
        if (upper_[j] - lower_[j] <= 0.0) continue;  // fixed
        const double d = costs[j] - column_dual(j);
        const double violation = state_[j] == AT_LOWER ? d : -d;
        if (violation > best_violation) {
          entering = j;
          if (bland) break;
          best_violation = violation;
        }
      }
      if (entering == total_) return Outcome::optimal;

      // Direction of movement for the entering variable and the basics.
      const double sigma = state_[entering] == AT_LOWER ? 1.0 : -1.0;
      std::vector<double> a_col(col(entering), col(entering) + m_);
      const std::vector<double> w = factor_->solve(a_col);

      // Ratio test: the entering variable may travel to its opposite bound
      // unless a basic variable hits a bound first.
      double t_max = upper_[entering] - lower_[entering];
      std::size_t blocking = m_;  // m_ means bound flip
      std::size_t blocking_var = entering;
      BoundSide blocking_side = AT_LOWER;
      for (std::size_t i = 0; i < m_; ++i) {
        const double rate = -sigma * w[i];  // d x_basic[i] / d t
        const std::size_t j = basis_[i];
        double limit;
        BoundSide side;
        if (rate < -pivot_tol_) {
          limit = (x_[j] - lower_[j]) / (-rate);
          side = AT_LOWER;
        } else if (rate > pivot_tol_) {
          limit = (upper_[j] - x_[j]) / rate;
          side = AT_UPPER;
        } else {
          continue;
        }
        limit = std::max(limit, 0.0);
        if (limit < t_max - ratio_tie_tol_ ||
            (limit < t_max + ratio_tie_tol_ && j < blocking_var)) {
          t_max = limit;
          blocking = i;
          blocking_var = j;
          blocking_side = side;
        }
      }
      if (!std::isfinite(t_max)) return Outcome::unbounded;

      if (blocking == m_) {
        // Bound flip, basis unchanged.
        state_[entering] = state_[entering] == AT_LOWER ? AT_UPPER : AT_LOWER;
        x_[entering] = state_[entering] == AT_LOWER ? lower_[entering] : upper_[entering];
      } else {
        const std::size_t leaving = basis_[blocking];
        x_[leaving] = blocking_side == AT_LOWER ? lower_[leaving] : upper_[leaving];
        state_[leaving] = blocking_side;
        if (leaving >= n_) upper_[leaving] = 0.0;  // artificials never re-enter
        x_[entering] =
            (sigma > 0 ? lower_[entering] : upper_[entering]) + sigma * t_max;
        state_[entering] = BASIC;
        basis_[blocking] = entering;
        needs_factor = true;
      }
    }
    return Outcome::iteration_limit;
  }

  /// Sum of artificial variables (phase-1 objective value, negated).
  double artificial_sum() const {
    double s = 0.0;
    for (std::size_t i = n_; i < total_; ++i) s += x_[i];
    return s;
  }

  /// Pivot basic artificial variables out where possible and freeze all
  /// artificials at zero. Call only after phase 1 reached (near-)zero.
  void retire_artificials() {
    factorize();
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      // Row i of B^{-1}, then the pivot value for each structural column.
      std::vector<double> e(m_, 0.0);
      e[i] = 1.0;
      const std::vector<double> brow = factor_->solve_transpose(e);
      std::size_t best = total_;
      double best_abs = 1e-9;
      for (std::size_t j = 0; j < n_; ++j) {
        if (state_[j] == BASIC) continue;
        double piv = 0.0;
        for (std::size_t r = 0; r < m_; ++r) piv += brow[r] * col(j)[r];
        if (std::abs(piv) > best_abs) {
          best_abs = std::abs(piv);
          best = j;
        }
      }
      if (best == total_) continue;  // redundant row; artificial stays, fixed at 0
      const std::size_t art = basis_[i];
      state_[art] = AT_LOWER;
      x_[art] = 0.0;
      basis_[i] = best;
      state_[best] = BASIC;  // value recomputed on next factorization
      factorize();
    }
    for (std::size_t j = n_; j < total_; ++j) {
      lower_[j] = upper_[j] = 0.0;
      if (state_[j] != BASIC) x_[j] = 0.0;
    }
  }

  std::vector<double> structural_values() const {
    return std::vector<double>(x_.begin(), x_.begin() + n_);
  }

  /// Duals and dual objective for the given costs at the current basis.
  std::pair<std::vector<double>, double> duals_and_dual_objective(
      const std::vector<double>& costs) {
    factorize();
    compute_duals(costs);
    double value = 0.0;
    for (std::size_t i = 0; i < m_; ++i) value += duals_[i] * b_[i];
    for (std::size_t j = 0; j < total_; ++j) {
      if (state_[j] == BASIC) continue;
      const double d = costs[j] - column_dual(j);
      value += d > 0.0 ? d * upper_[j] : d * lower_[j];
    }
    return {duals_, value};
  }

  int iterations() const { return iterations_; }

 private:
  enum BoundSide { AT_LOWER, AT_UPPER, BASIC };

  double* col(std::size_t j) { return cols_.data() + j * m_; }
  const double* col(std::size_t j) const { return cols_.data() + j * m_; }

  void factorize() {
    linalg::Matrix bmat(m_, m_);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t r = 0; r < m_; ++r) bmat(r, i) = col(basis_[i])[r];
    factor_.emplace(std::move(bmat));
    if (!factor_->ok) throw SolverError("simplex: singular basis matrix");
  }

  void compute_basic_values() {
    std::vector<double> r(b_);
    for (std::size_t j = 0; j < total_; ++j) {
      if (state_[j] == BASIC || x_[j] == 0.0) continue;
      for (std::size_t i = 0; i < m_; ++i) r[i] -= col(j)[i] * x_[j];
    }
    const std::vector<double> xb = factor_->solve(r);
    for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
  }

  void compute_duals(const std::vector<double>& costs) {
    std::vector<double> cb(m_);
    for (std::size_t i = 0; i < m_; ++i) cb[i] = costs[basis_[i]];
    duals_ = factor_->solve_transpose(cb);
  }

  double column_dual(std::size_t j) const {
    double s = 0.0;
    const double* a = col(j);
    for (std::size_t i = 0; i < m_; ++i) s += duals_[i] * a[i];
    return s;
  }

  std::size_t m_, n_, total_;
  std::vector<double> cols_;  // structural then artificial columns
  std::vector<double> lower_, upper_, b_, x_;
  std::vector<BoundSide> state_;
  std::vector<std::size_t> basis_;
  std::vector<double> duals_;
  std::optional<linalg::LuFactor> factor_;
  int iterations_ = 0;

  static constexpr double reduced_cost_tol_ = 1e-9;
  static constexpr double pivot_tol_ = 1e-10;
  static constexpr double ratio_tie_tol_ = 1e-12;
};

}  // namespace detail

/// Maximize c'x subject to A x = b, l <= x <= u.
inline Solution maximize(const Problem& prob) {
  const std::size_t n = prob.num_vars, m = prob.num_rows;
  const int max_iterations = static_cast<int>(50 * (n + m) + 5000);
  const int bland_after = static_cast<int>(20 * (n + m) + 500);

  detail::SimplexState state(prob);
  Solution sol;

  // Phase 1: maximize minus the sum of artificials.
  std::vector<double> phase1_costs(n + m, 0.0);
  for (std::size_t j = n; j < n + m; ++j) phase1_costs[j] = -1.0;
  Outcome out = state.run(phase1_costs, max_iterations, bland_after);
  if (out == Outcome::iteration_limit || out == Outcome::unbounded) {
    sol.outcome = Outcome::iteration_limit;
    sol.iterations = state.iterations();
    return sol;
  }
  double scale = 1.0;
  for (double v : prob.rhs) scale = std::max(scale, std::abs(v));
  if (state.artificial_sum() > 1e-9 * scale) {
    sol.outcome = Outcome::infeasible;
    sol.infeasibility = state.artificial_sum();
    sol.iterations = state.iterations();
    return sol;
  }
  state.retire_artificials();

  // Phase 2: the real objective.
  std::vector<double> costs(prob.objective);
  costs.resize(n + m, 0.0);
  out = state.run(costs, max_iterations, bland_after);
  sol.iterations = state.iterations();
  if (out != Outcome::optimal) {
    sol.outcome = out;
    return sol;
  }

  sol.outcome = Outcome::optimal;
  sol.x = state.structural_values();
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += prob.objective[j] * sol.x[j];
  auto [duals, dual_value] = state.duals_and_dual_objective(costs);
  sol.duals = std::move(duals);
  sol.duality_gap = std::abs(dual_value - sol.objective);
  return sol;
}

}  // namespace transport::lp

#pragma once

// Synthetic data generators used for validation, plus the oracle quantities
// (true per-unit effects, oracle transport weights, analytic density ratio)
// that only tests and the simulate command consume.
//
// Each unit is drawn i.i.d. as follows: covariates X in [0,1]^4; a latent
// sign S with P(S=1|x) = (1 + Gamma* e(x)) / ((1 + Gamma*)(1 + e(x))) where
// e(x) = exp(alpha0 + x'mu); U = (2S-1)|U'| with U' ~ N(0, (1+0.5 sin(2.5 x1))^2);
// W ~ Bernoulli(1/2); location L ~ Bernoulli(sigmoid(alpha0 + x'mu +
// log(Gamma*)(2S-1))); tau = x1 + U + 4; Y = (X+4)'beta + U + W tau + sigma eps.
// This construction makes the marginal location probability given x equal
// sigmoid(alpha0 + x'mu) exactly, and the conditional density ratio of U
// across locations equal Gamma*^(2S-1), so the oracle weight z* is known.
//
// Draw order per unit (fixed for reproducibility): 4 covariate draws, S,
// U' (two draws), W, L, eps (two draws).

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "transport/dataset.hpp"
#include "transport/errors.hpp"
#include "transport/rng.hpp"

namespace transport {

enum class CovariateLaw { beta_half_half, uniform01 };
enum class DgpSetup { A, B, custom };

struct DgpConfig {
  DgpSetup setup = DgpSetup::custom;
  int n_total = 1000;  // combined size across both locations
  double gamma_star = 1.0;
  double alpha0 = 0.0;
  std::array<double, 4> mu{0, 0, 0, 0};
  std::array<double, 4> beta{0, 0, 0, 0};
  double sigma = 1.0;
  CovariateLaw covariate_law = CovariateLaw::uniform01;
  std::uint64_t seed = 0;

  static DgpConfig setup_a(std::uint64_t seed, int n_total = 1000) {
    DgpConfig c;
    c.setup = DgpSetup::A;
    c.n_total = n_total;
    c.gamma_star = std::exp(0.2);
    c.alpha0 = 0.0;
    c.mu = {2.0, 2.0, -2.0, -2.0};
    c.beta = {0.513, 0.045, 0.7, 0.646};
    c.sigma = 3.0;
    c.covariate_law = CovariateLaw::beta_half_half;
    c.seed = seed;
    return c;
  }

  static DgpConfig setup_b(std::uint64_t seed, int n_total = 1000) {
    DgpConfig c;
    c.setup = DgpSetup::B;
    c.n_total = n_total;
    c.gamma_star = std::exp(0.5);
    c.alpha0 = -2.0;
    c.mu = {0.709, 0.438, 0.2, 0.767};
    c.beta = {0.513, 0.045, 0.7, 0.646};
    c.sigma = 0.5;
    c.covariate_law = CovariateLaw::uniform01;
    c.seed = seed;
    return c;
  }

  bool valid() const { return gamma_star >= 1.0 && sigma > 0.0 && n_total > 0; }
};

struct SimulatedUnit {
  std::array<double, 4> x{};
  double u = 0.0;
  int s = 0;
  int w = 0;
  int l = 0;
  double tau = 0.0;
  double eps = 0.0;
  double y = 0.0;
  double z_star = 1.0;  // oracle weight Gamma*^(2S-1)
};

struct SimulatedPopulation {
  DgpConfig config;
  std::vector<SimulatedUnit> units;
};

namespace sim {

inline double linear_index(const DgpConfig& c, const std::array<double, 4>& x) {
  double t = c.alpha0;
  for (std::size_t k = 0; k < 4; ++k) t += c.mu[k] * x[k];
  return t;
}

/// P(S = 1 | x): algebraic simplification of the mixing fraction,
/// (1 + Gamma* e) / ((1 + Gamma*)(1 + e)); continuous in Gamma*, equal to 1/2
/// at Gamma* = 1.
inline double s_probability(const DgpConfig& c, const std::array<double, 4>& x) {
  const double e = std::exp(linear_index(c, x));
  return (1.0 + c.gamma_star * e) / ((1.0 + c.gamma_star) * (1.0 + e));
}

/// P(L = 1 | x, s).
inline double location_probability(const DgpConfig& c, const std::array<double, 4>& x, int s) {
  const double t = linear_index(c, x) + std::log(c.gamma_star) * (s == 1 ? 1.0 : -1.0);
  return 1.0 / (1.0 + std::exp(-t));
}

/// P(L = 1 | x) marginalized over S; by construction this equals
/// sigmoid(alpha0 + x'mu).
inline double marginal_location_probability(const DgpConfig& c, const std::array<double, 4>& x) {
  const double q = s_probability(c, x);
  return q * location_probability(c, x, 1) + (1.0 - q) * location_probability(c, x, 0);
}

/// Monte-Carlo estimate of P(L = 1) under the covariate law.
inline double location_marginal_mc(const DgpConfig& c, int n_draws = 200000,
                                   std::uint64_t seed = 12345) {
  rng::Engine eng(rng::substream_seed(seed, 0));
  double acc = 0.0;
  for (int i = 0; i < n_draws; ++i) {
    std::array<double, 4> x;
    for (auto& v : x)
      v = c.covariate_law == CovariateLaw::beta_half_half ? rng::beta_half_half(eng)
                                                          : rng::uniform01(eng);
    acc += marginal_location_probability(c, x);
  }
  return acc / static_cast<double>(n_draws);
}

}  // namespace sim

inline SimulatedPopulation generate(const DgpConfig& config) {
  if (!config.valid()) throw DataError("invalid simulation config");
  SimulatedPopulation pop;
  pop.config = config;
  pop.units.resize(config.n_total);
  rng::Engine eng(rng::substream_seed(config.seed, 0));
  const double log_gamma = std::log(config.gamma_star);

  for (auto& unit : pop.units) {
    for (auto& v : unit.x)
      v = config.covariate_law == CovariateLaw::beta_half_half ? rng::beta_half_half(eng)
                                                               : rng::uniform01(eng);
    unit.s = rng::bernoulli(eng, sim::s_probability(config, unit.x)) ? 1 : 0;
    const double scale = 1.0 + 0.5 * std::sin(2.5 * unit.x[0]);
    const double u_prime = rng::normal01(eng) * scale;
    unit.u = (unit.s == 1 ? 1.0 : -1.0) * std::abs(u_prime);
    unit.w = rng::bernoulli(eng, 0.5) ? 1 : 0;
    unit.l = rng::bernoulli(eng, sim::location_probability(config, unit.x, unit.s)) ? 1 : 0;
    unit.tau = unit.x[0] + unit.u + 4.0;
    unit.eps = rng::normal01(eng);
    double xb = 0.0;
    for (std::size_t k = 0; k < 4; ++k) xb += (unit.x[k] + 4.0) * config.beta[k];
    unit.y = xb + unit.u + unit.w * unit.tau + config.sigma * unit.eps;
    unit.z_star = std::exp(log_gamma * (unit.s == 1 ? 1.0 : -1.0));
  }
  return pop;
}

/// Per-unit oracle values kept out of the datasets handed to estimators.
struct OracleRecord {
  std::vector<double> source_u, source_tau, source_z_star;
  std::vector<double> target_tau;
  double target_tau_mean = 0.0;  // finite-population ground truth
};

struct SplitResult {
  SourceDataset source;
  TargetDataset target;
  OracleRecord oracle;
};

/// Partition a population by location: L=0 units become the source dataset
/// (covariates, treatment, outcome), L=1 units the covariates-only target.
inline SplitResult split(const SimulatedPopulation& pop) {
  SplitResult out;
  out.source.propensity = 0.5;
  for (const auto& unit : pop.units) {
    if (unit.l == 0) {
      SourceUnit su;
      su.x.assign(unit.x.begin(), unit.x.end());
      su.w = unit.w;
      su.y = unit.y;
      out.source.units.push_back(std::move(su));
      out.oracle.source_u.push_back(unit.u);
      out.oracle.source_tau.push_back(unit.tau);
      out.oracle.source_z_star.push_back(unit.z_star);
    } else {
      TargetUnit tu;
      tu.x.assign(unit.x.begin(), unit.x.end());
      out.target.units.push_back(std::move(tu));
      out.oracle.target_tau.push_back(unit.tau);
    }
  }
  if (out.source.units.empty() || out.target.units.empty())
    throw DataError("simulated population left a location empty; draw again with another seed");
  double acc = 0.0;
  for (double t : out.oracle.target_tau) acc += t;
  out.oracle.target_tau_mean = acc / static_cast<double>(out.oracle.target_tau.size());
  return out;
}

namespace detail {

/// Ratio-normalized weighted difference of arm means.
inline double hajek_difference(const std::vector<int>& w, const std::vector<double>& y,
                               const std::vector<double>& rho) {
  double num1 = 0.0, den1 = 0.0, num0 = 0.0, den0 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 1) {
      num1 += rho[i] * y[i];
      den1 += rho[i];
    } else {
      num0 += rho[i] * y[i];
      den0 += rho[i];
    }
  }
  if (den1 == 0.0 || den0 == 0.0) throw DataError("hajek_difference: empty arm");
  return num1 / den1 - num0 / den0;
}

}  // namespace detail

/// Oracle estimator: the Hajek-weighted contrast on the source units using
/// the true weights z*_i r(x_i). The density ratio over observed covariates
/// is exp(alpha0 + x'mu) times the marginal odds P(L=0)/P(L=1); any constant
/// factor cancels in the ratio normalization, so the realized n0/n1 serves.
inline double oracle_ipw(const SimulatedPopulation& pop) {
  std::vector<int> w;
  std::vector<double> y, rho;
  std::size_t n0 = 0, n1 = 0;
  for (const auto& unit : pop.units) (unit.l == 0 ? n0 : n1) += 1;
  if (n0 == 0 || n1 == 0) throw DataError("oracle_ipw: a location is empty");
  const double odds = static_cast<double>(n0) / static_cast<double>(n1);
  for (const auto& unit : pop.units) {
    if (unit.l != 0) continue;
    w.push_back(unit.w);
    y.push_back(unit.y);
    const double r_x = std::exp(sim::linear_index(pop.config, unit.x)) * odds;
    rho.push_back(unit.z_star * r_x);
  }
  return detail::hajek_difference(w, y, rho);
}

}  // namespace transport

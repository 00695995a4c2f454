#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "transport/density_ratio.hpp"
#include "transport/simulation.hpp"

using namespace transport;

namespace {

// Source whose arm feature means both equal the target feature means exactly.
struct BalancedFixture {
  SourceDataset src;
  TargetDataset tgt;
};

BalancedFixture balanced_fixture() {
  BalancedFixture f;
  for (int w : {0, 1}) {
    for (double v : {0.0, 1.0}) {
      SourceUnit u;
      u.x = {v};
      u.w = w;
      u.y = v + w;
      f.src.units.push_back(u);
    }
  }
  for (double v : {0.0, 1.0}) f.tgt.units.push_back({{v}});
  return f;
}

// Binary covariate with arm fraction p0 of ones and target fraction p1.
struct BinaryFixture {
  SourceDataset src;
  TargetDataset tgt;
  double w0, w1;  // closed-form weights at x=0 and x=1
};

BinaryFixture binary_fixture() {
  BinaryFixture f;
  const int n_ones_src = 4, n_src = 10;  // p0 = 0.4 in both arms
  const int n_ones_tgt = 6, n_tgt = 10;  // p1 = 0.6
  for (int w : {0, 1}) {
    for (int i = 0; i < n_src; ++i) {
      SourceUnit u;
      u.x = {i < n_ones_src ? 1.0 : 0.0};
      u.w = w;
      u.y = 0.0;
      f.src.units.push_back(u);
    }
  }
  for (int i = 0; i < n_tgt; ++i) f.tgt.units.push_back({{i < n_ones_tgt ? 1.0 : 0.0}});
  const double p0 = 0.4, p1 = 0.6;
  f.w0 = (1.0 - p1) / (1.0 - p0);
  f.w1 = p1 / p0;
  return f;
}

DensityRatioFit fit_setup_a(std::uint64_t seed, int n_total = 1000) {
  const auto pop = generate(DgpConfig::setup_a(seed, n_total));
  const auto parts = split(pop);
  return fit(parts.source, parts.target, BasisSpec::identity(4));
}

}  // namespace

TEST_CASE("exactly balanced data yields zero coefficients and unit weights") {
  const auto f = balanced_fixture();
  const auto result = fit(f.src, f.tgt, BasisSpec::identity(1));
  REQUIRE(result.converged());
  CHECK(result.treated.iterations == 0);
  for (double b : result.treated.beta) CHECK(std::abs(b) < 1e-12);
  for (double b : result.control.beta) CHECK(std::abs(b) < 1e-12);
  for (double w : weights(result, f.src, BasisSpec::identity(1)))
    CHECK(w == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("binary covariate weights match the two-point closed form") {
  const auto f = binary_fixture();
  const auto spec = BasisSpec::identity(1);
  const auto result = fit(f.src, f.tgt, spec);
  REQUIRE(result.converged());
  const auto w = weights(result, f.src, spec);
  for (std::size_t i = 0; i < f.src.units.size(); ++i) {
    const double expected = f.src.units[i].x[0] == 1.0 ? f.w1 : f.w0;
    CHECK(w[i] == Catch::Approx(expected).margin(1e-7));
  }
  // The closed form satisfies the moment equations exactly, so residuals are
  // tiny after convergence.
  for (const auto& row : balance_report(result, f.src, f.tgt, spec)) CHECK(row.pass);
}

TEST_CASE("arm mean of weights is one through the intercept moment") {
  const auto pop = generate(DgpConfig::setup_b(17, 800));
  const auto parts = split(pop);
  const auto spec = BasisSpec::identity(4);
  const auto result = fit(parts.source, parts.target, spec);
  REQUIRE(result.converged());
  const auto w = weights(result, parts.source, spec);
  for (int arm : {0, 1}) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < parts.source.units.size(); ++i) {
      if (parts.source.units[i].w != arm) continue;
      sum += w[i];
      ++n;
    }
    CHECK(sum / static_cast<double>(n) == Catch::Approx(1.0).margin(1e-8));
  }
}

TEST_CASE("balance residuals meet the tolerance on simulated replicates") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto result = fit_setup_a(seed);
    REQUIRE(result.converged());
    CHECK(linalg::max_abs(result.treated.balance_residual) <= 1e-8);
    CHECK(linalg::max_abs(result.control.balance_residual) <= 1e-8);
  }
}

TEST_CASE("analytic gradient matches central differences") {
  const auto pop = generate(DgpConfig::setup_a(5, 600));
  const auto parts = split(pop);
  const auto spec = BasisSpec::identity(4);
  const FeatureMatrix phi = expand_dataset(spec, covariate_rows(parts.source));
  const FeatureMatrix phi_t = expand_dataset(spec, covariate_rows(parts.target));
  const std::size_t p = spec.feature_count();
  std::vector<double> cbar(p, 0.0);
  for (std::size_t i = 0; i < phi_t.rows; ++i)
    for (std::size_t j = 0; j < p; ++j) cbar[j] += phi_t.row(i)[j];
  for (auto& v : cbar) v /= static_cast<double>(phi_t.rows);

  for (int arm : {0, 1}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < parts.source.units.size(); ++i)
      if (parts.source.units[i].w == arm) rows.push_back(i);
    const detail::ArmProblem prob{phi, rows, cbar};

    std::mt19937_64 eng(31 + arm);
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> beta(p);
      for (auto& b : beta) b = unif(eng);
      std::vector<double> grad;
      prob.gradient_hessian(beta, grad, nullptr);
      const double h = 1e-5;
      for (std::size_t j = 0; j < p; ++j) {
        auto bp = beta, bm = beta;
        bp[j] += h;
        bm[j] -= h;
        const double fd = (prob.objective(bp) - prob.objective(bm)) / (2 * h);
        const double scale = std::max({1.0, std::abs(fd), std::abs(grad[j])});
        CHECK(std::abs(grad[j] - fd) / scale <= 1e-5);
      }
    }
  }
}

TEST_CASE("final objective never exceeds the objective at zero") {
  for (std::uint64_t seed : {11ull, 12ull}) {
    const auto result = fit_setup_a(seed, 600);
    REQUIRE(result.converged());
    CHECK(result.treated.objective <= 1.0 + 1e-12);
    CHECK(result.control.objective <= 1.0 + 1e-12);
  }
}

TEST_CASE("objective is non-increasing across iterations") {
  const auto pop = generate(DgpConfig::setup_a(21, 600));
  const auto parts = split(pop);
  const auto spec = BasisSpec::identity(4);
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 8; ++k) {
    FitOptions opts;
    opts.max_iterations = k;
    const auto result = fit(parts.source, parts.target, spec, opts);
    CHECK(result.treated.objective <= previous + 1e-12);
    previous = result.treated.objective;
  }
}

TEST_CASE("rescaling a covariate in both locations leaves weights unchanged") {
  const auto pop = generate(DgpConfig::setup_b(23, 700));
  auto parts = split(pop);
  const auto spec = BasisSpec::identity(4);
  const auto base = fit(parts.source, parts.target, spec);
  REQUIRE(base.converged());
  const auto w_base = weights(base, parts.source, spec);

  const double k = 12.5;
  auto scaled_src = parts.source;
  auto scaled_tgt = parts.target;
  for (auto& u : scaled_src.units) u.x[2] *= k;
  for (auto& u : scaled_tgt.units) u.x[2] *= k;
  const auto scaled = fit(scaled_src, scaled_tgt, spec);
  REQUIRE(scaled.converged());
  const auto w_scaled = weights(scaled, scaled_src, spec);
  for (std::size_t i = 0; i < w_base.size(); ++i)
    CHECK(w_scaled[i] == Catch::Approx(w_base[i]).margin(1e-6));
  CHECK(scaled.treated.beta[3] == Catch::Approx(base.treated.beta[3] / k).margin(1e-6));
}

TEST_CASE("separation raises an error naming the offending feature") {
  // The treated arm never shows x = 1 while the target does, so no finite
  // tilt can match the target mean.
  SourceDataset src;
  for (int i = 0; i < 20; ++i) {
    SourceUnit u;
    u.x = {0.0};
    u.w = 1;
    u.y = 1.0;
    src.units.push_back(u);
  }
  for (int i = 0; i < 20; ++i) {
    SourceUnit u;
    u.x = {i % 2 ? 1.0 : 0.0};
    u.w = 0;
    u.y = 0.0;
    src.units.push_back(u);
  }
  TargetDataset tgt;
  for (int i = 0; i < 20; ++i) tgt.units.push_back({{i % 2 ? 1.0 : 0.0}});

  try {
    fit(src, tgt, BasisSpec::identity(1));
    FAIL("expected SeparationError");
  } catch (const SeparationError& e) {
    CHECK(e.feature_index == 1);
    CHECK(std::string(e.what()).find("treated") != std::string::npos);
  }
}

TEST_CASE("balance report with zero coefficients shows raw mean differences") {
  const auto f = binary_fixture();
  DensityRatioFit forced;
  forced.treated.beta = {0.0, 0.0};
  forced.control.beta = {0.0, 0.0};
  const auto rows = balance_report(forced, f.src, f.tgt, BasisSpec::identity(1));
  for (const auto& row : rows) {
    if (row.feature == 0) {
      CHECK(row.residual == Catch::Approx(0.0).margin(1e-15));  // intercept: 1 vs 1
    } else {
      CHECK(row.residual == Catch::Approx(0.4 - 0.6).margin(1e-15));
      CHECK_FALSE(row.pass);
    }
  }
}

TEST_CASE("weights refuse a non-converged fit") {
  const auto f = binary_fixture();
  DensityRatioFit bad;
  bad.treated.beta = {0.0, 0.0};
  bad.control.beta = {0.0, 0.0};
  bad.treated.converged = false;
  bad.control.converged = true;
  CHECK_THROWS_AS(weights(bad, f.src, BasisSpec::identity(1)), SolverError);
}

TEST_CASE("feature bound is checked empirically and reported") {
  const auto f = binary_fixture();
  auto spec = BasisSpec::identity(1);
  spec.bound = 0.5;  // deliberately below the actual sup-norm of 1
  const auto result = fit(f.src, f.tgt, spec);
  CHECK(result.feature_bound_empirical == 1.0);
  CHECK_FALSE(result.feature_bound_ok);
}

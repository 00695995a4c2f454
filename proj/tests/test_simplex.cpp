#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "transport/simplex.hpp"

using transport::lp::Outcome;
using transport::lp::Problem;
using transport::lp::Solution;

namespace {

Problem make_problem(std::size_t n, std::size_t m) {
  Problem p;
  p.num_vars = n;
  p.num_rows = m;
  p.objective.assign(n, 0.0);
  p.lower.assign(n, 0.0);
  p.upper.assign(n, 1.0);
  p.rhs.assign(m, 0.0);
  p.cols.assign(n * m, 0.0);
  return p;
}

}  // namespace

TEST_CASE("box-only maximization picks the favorable bounds") {
  auto p = make_problem(2, 0);
  p.objective = {2.0, -1.0};
  p.lower = {1.0, 0.0};
  p.upper = {3.0, 2.0};
  const Solution s = transport::lp::maximize(p);
  REQUIRE(s.outcome == Outcome::optimal);
  CHECK(s.objective == Catch::Approx(6.0).margin(1e-12));
  CHECK(s.x[0] == 3.0);
  CHECK(s.x[1] == 0.0);
}

TEST_CASE("single equality row with unit costs") {
  auto p = make_problem(3, 1);
  p.objective = {1.0, 2.0, 3.0};
  for (std::size_t j = 0; j < 3; ++j) p.at(0, j) = 1.0;
  p.rhs = {1.5};
  const Solution s = transport::lp::maximize(p);
  REQUIRE(s.outcome == Outcome::optimal);
  // Best: x3 = 1, x2 = 0.5.
  CHECK(s.objective == Catch::Approx(4.0).margin(1e-10));
  CHECK(s.duality_gap <= 1e-9);
}

TEST_CASE("conflicting equality is reported infeasible with a certificate") {
  auto p = make_problem(1, 1);
  p.objective = {1.0};
  p.at(0, 0) = 1.0;
  p.rhs = {2.0};  // x in [0,1] cannot reach 2
  const Solution s = transport::lp::maximize(p);
  REQUIRE(s.outcome == Outcome::infeasible);
  CHECK(s.infeasibility == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("fixed variables never move") {
  auto p = make_problem(2, 1);
  p.objective = {5.0, 1.0};
  p.lower = {0.5, 0.0};
  p.upper = {0.5, 2.0};  // x1 fixed
  p.at(0, 0) = 1.0;
  p.at(0, 1) = 1.0;
  p.rhs = {1.0};
  const Solution s = transport::lp::maximize(p);
  REQUIRE(s.outcome == Outcome::optimal);
  CHECK(s.x[0] == 0.5);
  CHECK(s.x[1] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("random dense instances satisfy primal feasibility and zero gap") {
  std::mt19937_64 eng(404);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  int solved = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(eng() % 7);
    const std::size_t m = 1 + static_cast<std::size_t>(eng() % std::min<std::size_t>(n, 3));
    auto p = make_problem(n, m);
    for (auto& c : p.objective) c = unif(eng);
    for (std::size_t j = 0; j < n; ++j) {
      p.lower[j] = -1.0 + 0.2 * unif(eng);
      p.upper[j] = 1.0 + 0.2 * unif(eng);
    }
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i) p.at(i, j) = unif(eng);
    // Make a feasible instance by construction.
    std::vector<double> z0(n);
    for (std::size_t j = 0; j < n; ++j)
      z0[j] = p.lower[j] + (p.upper[j] - p.lower[j]) * (0.5 + 0.4 * unif(eng));
    for (std::size_t i = 0; i < m; ++i) {
      double b = 0.0;
      for (std::size_t j = 0; j < n; ++j) b += p.at(i, j) * z0[j];
      p.rhs[i] = b;
    }
    const Solution s = transport::lp::maximize(p);
    REQUIRE(s.outcome == Outcome::optimal);
    ++solved;
    for (std::size_t i = 0; i < m; ++i) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += p.at(i, j) * s.x[j];
      CHECK(std::abs(lhs - p.rhs[i]) <= 1e-8);
    }
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(s.x[j] >= p.lower[j] - 1e-9);
      CHECK(s.x[j] <= p.upper[j] + 1e-9);
    }
    CHECK(s.duality_gap <= 1e-8);
  }
  CHECK(solved == 120);
}

TEST_CASE("solutions are bit-for-bit reproducible") {
  auto p = make_problem(6, 2);
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (auto& c : p.objective) c = unif(eng);
  for (std::size_t j = 0; j < 6; ++j)
    for (std::size_t i = 0; i < 2; ++i) p.at(i, j) = unif(eng);
  p.rhs = {0.3, -0.1};
  const Solution a = transport::lp::maximize(p);
  const Solution b = transport::lp::maximize(p);
  REQUIRE(a.outcome == b.outcome);
  CHECK(a.objective == b.objective);
  CHECK(a.x == b.x);
  CHECK(a.iterations == b.iterations);
}

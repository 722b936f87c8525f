// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "iim/error.hpp"
#include "iim/krylov.hpp"
#include "iim/linalg.hpp"

using namespace iim;

namespace {

LinearMap diagonal(std::vector<double> d) {
  return [d](std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < d.size(); ++i) y[i] = d[i] * x[i];
  };
}

LinearMap dense(const linalg::DenseMatrix& a) {
  return [&a](std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
  };
}

/// Periodic 1D second difference; its null space is the constants.
LinearMap periodic_laplacian(std::size_t n) {
  return [n](std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[(i + n - 1) % n] - 2 * x[i] + x[(i + 1) % n];
  };
}

linalg::DenseMatrix nonsymmetric(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  linalg::DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = (i == j ? 3.0 : 0.0) + dist(rng) / std::sqrt(double(n));
  return a;
}

double residual_norm(const LinearMap& a, std::span<const double> x, std::span<const double> b) {
  std::vector<double> r(b.size());
  a(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return linalg::norm2(r);
}

}  // namespace

TEST_CASE("diagonal 1..10 converges in at most ten iterations") {
  std::vector<double> d(10);
  std::iota(d.begin(), d.end(), 1.0);
  const auto a = diagonal(d);
  std::vector<double> b(10, 1.0), x(10, 0.0);
  SolverConfig cfg;
  cfg.tolerance = 1e-12;
  const auto rep = gmres(a, nullptr, b, x, cfg);
  CHECK(rep.converged());
  CHECK(rep.iterations <= 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(x[i] == doctest::Approx(1.0 / d[i]));
}

TEST_CASE("identity operator and exact preconditioner take one iteration") {
  const std::vector<double> b{1.0, -2.0, 3.0};
  std::vector<double> x(3, 0.0);
  const auto id = diagonal({1.0, 1.0, 1.0});
  CHECK(gmres(id, nullptr, b, x, {}).iterations == 1);

  const auto a = diagonal({2.0, 5.0, 7.0});
  const auto inv = diagonal({0.5, 0.2, 1.0 / 7.0});
  for (PreconditionSide side : {PreconditionSide::Left, PreconditionSide::Right}) {
    SolverConfig cfg;
    cfg.side = side;
    std::fill(x.begin(), x.end(), 0.0);
    const auto rep = gmres(a, &inv, b, x, cfg);
    CHECK(rep.iterations == 1);
    CHECK(x[1] == doctest::Approx(-0.4));
  }
}

TEST_CASE("unrestarted residual history is non-increasing") {
  const auto m = nonsymmetric(40, 11);
  const auto a = dense(m);
  std::vector<double> b(40), x(40, 0.0);
  for (std::size_t i = 0; i < 40; ++i) b[i] = std::sin(double(i));
  SolverConfig cfg;
  cfg.tolerance = 1e-12;
  cfg.side = PreconditionSide::Right;
  const auto rep = gmres(a, nullptr, b, x, cfg);
  REQUIRE(rep.converged());
  for (std::size_t i = 1; i < rep.residuals.size(); ++i)
    CHECK(rep.residuals[i] <= rep.residuals[i - 1] * (1.0 + 1e-12));
  CHECK(residual_norm(a, x, b) <= 1e-11 * linalg::norm2(b));
}

TEST_CASE("flexible GMRES with a fixed preconditioner matches right GMRES") {
  const auto m = nonsymmetric(30, 5);
  const auto a = dense(m);
  std::vector<double> dinv(30);
  for (std::size_t i = 0; i < 30; ++i) dinv[i] = 1.0 / m(i, i);
  const auto jacobi = diagonal(dinv);
  std::vector<double> b(30, 1.0), x1(30, 0.0), x2(30, 0.0);
  SolverConfig cfg;
  cfg.tolerance = 1e-10;
  cfg.side = PreconditionSide::Right;
  cfg.restart = 50;
  const auto r1 = gmres(a, &jacobi, b, x1, cfg);
  const auto r2 = fgmres(a, &jacobi, b, x2, cfg);
  CHECK(r1.iterations == r2.iterations);
  for (std::size_t i = 0; i < 30; ++i) CHECK(x1[i] == doctest::Approx(x2[i]).epsilon(1e-8));
}

TEST_CASE("restarted GMRES still converges") {
  const auto m = nonsymmetric(60, 2);
  const auto a = dense(m);
  std::vector<double> b(60, 1.0), x(60, 0.0);
  SolverConfig cfg;
  cfg.tolerance = 1e-10;
  cfg.restart = 5;
  const auto rep = fgmres(a, nullptr, b, x, cfg);
  CHECK(rep.converged());
  CHECK(residual_norm(a, x, b) <= 1e-9 * linalg::norm2(b));
}

TEST_CASE("iteration cap and stagnation are reported") {
  std::vector<double> d(10);
  std::iota(d.begin(), d.end(), 1.0);
  std::vector<double> b(10, 1.0), x(10, 0.0);
  SolverConfig cfg;
  cfg.max_iterations = 3;
  CHECK(gmres(diagonal(d), nullptr, b, x, cfg).status == SolveStatus::MaxIterations);

  // Inconsistent singular system: the residual cannot drop below |b_2|.
  const std::vector<double> c{0.0, 1.0};
  std::vector<double> y(2, 0.0);
  const auto rep = gmres(diagonal({1.0, 0.0}), nullptr, c, y, {});
  CHECK(rep.status == SolveStatus::Stagnation);
  CHECK(rep.iterations < 500);

  cfg.tolerance = 0.0;
  CHECK_THROWS_AS(gmres(diagonal(d), nullptr, b, x, cfg), Error);
}

TEST_CASE("bordered solve of a singular system") {
  const std::size_t n = 20;
  const auto a = periodic_laplacian(n);
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = std::cos(2 * M_PI * i / n) + 0.3 * std::sin(6 * M_PI * i / n);
  SolverConfig cfg;
  cfg.tolerance = 1e-12;

  SUBCASE("compatible data") {
    std::vector<double> x(n, 0.0);
    const auto rep = solve_augmented(a, nullptr, nullptr, b, 5.0, x, cfg);
    CHECK(rep.converged());
    CHECK(std::abs(rep.alpha) <= 1e-10);
    CHECK(std::accumulate(x.begin(), x.end(), 0.0) == doctest::Approx(5.0));
    CHECK(residual_norm(a, x, b) <= 1e-10);
  }
  SUBCASE("a constant added to b comes back as the shift") {
    std::vector<double> shifted = b, x(n, 0.0);
    for (double& v : shifted) v += 0.75;
    const auto rep = solve_augmented(a, nullptr, nullptr, shifted, 0.0, x, cfg);
    CHECK(rep.alpha == doctest::Approx(0.75));
    CHECK(residual_norm(a, x, b) <= 1e-10);
  }
  SUBCASE("incompatible system") {
    const double eps = 1e-8;
    const auto bad = [eps](std::span<const double> x, std::span<double> y) {
      y[0] = x[0] - x[1];
      y[1] = (1 + eps) * (x[0] - x[1]);
    };
    const std::vector<double> rhs{1.0, 0.0};
    std::vector<double> x(2, 0.0);
    try {
      solve_augmented(bad, nullptr, nullptr, rhs, 0.0, x, cfg);
      FAIL("expected an incompatibility error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Incompatible);
    }
  }
}

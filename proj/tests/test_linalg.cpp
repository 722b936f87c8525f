// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "iim/error.hpp"
#include "iim/linalg.hpp"

using namespace iim;
using namespace iim::linalg;

namespace {

DenseMatrix rotation3(double a, double b) {
  // Product of two plane rotations: orthogonal by construction.
  DenseMatrix r1 = DenseMatrix::identity(3), r2 = DenseMatrix::identity(3);
  r1(0, 0) = std::cos(a), r1(0, 1) = -std::sin(a), r1(1, 0) = std::sin(a), r1(1, 1) = std::cos(a);
  r2(1, 1) = std::cos(b), r2(1, 2) = -std::sin(b), r2(2, 1) = std::sin(b), r2(2, 2) = std::cos(b);
  return r1.multiply(r2);
}

}  // namespace

TEST_CASE("least squares with an orthogonal matrix returns A^T B") {
  const DenseMatrix a = rotation3(0.7, -1.3);
  DenseMatrix b(3, 2);
  b(0, 0) = 1, b(1, 0) = -2, b(2, 0) = 0.5, b(0, 1) = 3, b(1, 1) = 0.25, b(2, 1) = -1;
  const auto r = lsq_solve_pivoted(a, b);
  CHECK(r.rank == 3);
  const DenseMatrix expect = a.transposed().multiply(b);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(r.x(i, j) == doctest::Approx(expect(i, j)).epsilon(1e-12));
}

TEST_CASE("overdetermined Vandermonde fit reproduces polynomial samples") {
  const std::vector<double> coeffs{0.3, -1.2, 2.0, 0.7};
  const std::size_t m = 12;
  DenseMatrix a(m, coeffs.size()), b(m, 1);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = -1.0 + 2.0 * static_cast<double>(i) / (m - 1);
    double p = 1.0, y = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      a(i, j) = p;
      y += coeffs[j] * p;
      p *= t;
    }
    b(i, 0) = y;
  }
  const auto r = lsq_solve_pivoted(a, b);
  const auto fit = a.multiply(std::vector<double>{r.x(0, 0), r.x(1, 0), r.x(2, 0), r.x(3, 0)});
  for (std::size_t i = 0; i < m; ++i) CHECK(std::abs(fit[i] - b(i, 0)) <= 1e-10);
  for (std::size_t j = 0; j < coeffs.size(); ++j) CHECK(r.x(j, 0) == doctest::Approx(coeffs[j]).epsilon(1e-10));
}

TEST_CASE("duplicated column lowers the rank by one") {
  DenseMatrix a(5, 3);
  for (std::size_t i = 0; i < 5; ++i) {
    a(i, 0) = 1.0 + i;
    a(i, 1) = std::sin(static_cast<double>(i));
    a(i, 2) = a(i, 0);
  }
  CHECK(PivotedQR(a).rank() == 2);
}

TEST_CASE("pinv_transpose_apply is the adjoint of solve") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(-1, 1);
  DenseMatrix a(9, 4);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 4; ++j) a(i, j) = d(rng);
  const PivotedQR qr(a);
  std::vector<double> v{0.2, -0.5, 1.0, 0.3}, b(9);
  for (double& x : b) x = d(rng);
  const auto w = qr.pinv_transpose_apply(v);
  CHECK(dot(w, b) == doctest::Approx(dot(v, qr.solve(b))).epsilon(1e-12));
}

TEST_CASE("lu_solve on small systems") {
  SUBCASE("identity") {
    const std::vector<double> b{1.5, -2.0, 3.0};
    const auto x = lu_solve(DenseMatrix::identity(3), b);
    for (int i = 0; i < 3; ++i) CHECK(x[i] == b[i]);
  }
  SUBCASE("2x2 by hand") {
    DenseMatrix a(2, 2);
    a(0, 0) = 2, a(0, 1) = 1, a(1, 0) = 1, a(1, 1) = 3;
    const auto x = lu_solve(a, std::vector<double>{3, 4});
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(1.0));
  }
  SUBCASE("singular matrix") {
    DenseMatrix a(2, 2);
    a(0, 0) = 1, a(0, 1) = 2, a(1, 0) = 2, a(1, 1) = 4;
    CHECK_THROWS_AS(LuFactorization{a}, Error);
  }
}

TEST_CASE("lu_solve residual bound on a diagonally dominant matrix") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> d(-1, 1);
  const std::size_t n = 50;
  DenseMatrix a(n, n);
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) = d(rng);
    a(i, i) += static_cast<double>(n);
    b[i] = d(rng);
  }
  const auto x = lu_solve(a, b);
  const auto ax = a.multiply(x);
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i) r = std::max(r, std::abs(ax[i] - b[i]));
  CHECK(r <= 1e-10 * a.norm_inf() * norm_inf(x));
}

TEST_CASE("hessenberg_eigs") {
  SUBCASE("diagonal") {
    DenseMatrix h(3, 3);
    h(0, 0) = 4, h(1, 1) = -1, h(2, 2) = 2.5;
    auto ev = hessenberg_eigs(h);
    std::vector<double> re;
    for (auto z : ev) re.push_back(z.real());
    std::sort(re.begin(), re.end());
    CHECK(re[0] == doctest::Approx(-1));
    CHECK(re[1] == doctest::Approx(2.5));
    CHECK(re[2] == doctest::Approx(4));
  }
  SUBCASE("rotation-like block gives the quadratic-formula pair") {
    DenseMatrix h(2, 2);
    h(0, 0) = 1, h(0, 1) = -2, h(1, 0) = 3, h(1, 1) = 1;
    // lambda^2 - 2 lambda + 7 = 0 -> 1 +- i sqrt(6)
    const auto ev = hessenberg_eigs(h);
    REQUIRE(ev.size() == 2);
    for (auto z : ev) {
      CHECK(z.real() == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(std::abs(z.imag()) == doctest::Approx(std::sqrt(6.0)).epsilon(1e-10));
    }
    CHECK(ev[0].imag() * ev[1].imag() < 0);
  }
  SUBCASE("companion matrix of (x-1)(x-2)(x-3)") {
    DenseMatrix h(3, 3);
    h(0, 0) = 6, h(0, 1) = -11, h(0, 2) = 6, h(1, 0) = 1, h(2, 1) = 1;
    auto ev = hessenberg_eigs(h);
    std::vector<double> re;
    for (auto z : ev) {
      CHECK(std::abs(z.imag()) <= 1e-8);
      re.push_back(z.real());
    }
    std::sort(re.begin(), re.end());
    for (int i = 0; i < 3; ++i) CHECK(std::abs(re[i] - (i + 1)) <= 1e-8);
  }
}

TEST_CASE("sparse multiply matches the dense product") {
  SparseMatrix s;
  s.rows = s.cols = 3;
  // [[2, 0, -1], [0, 3, 0], [1, 1, 1]]
  s.col_index = {0, 2, 1, 0, 1, 2};
  s.values = {2, -1, 3, 1, 1, 1};
  s.row_ptr = {0, 2, 3, 6};
  const std::vector<double> x{1, 2, 3};
  std::vector<double> y(3);
  s.multiply(x, y);
  const auto yd = s.to_dense().multiply(x);
  for (int i = 0; i < 3; ++i) CHECK(y[i] == yd[i]);
  CHECK(y[0] == -1);
  CHECK(y[2] == 6);
}

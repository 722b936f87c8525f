// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "iim/error.hpp"
#include "iim/operator.hpp"

using namespace iim;

namespace {

constexpr double kPi = std::numbers::pi;

double u_exact(Vec2 x) { return std::sin(4 * kPi * x.x) * std::sin(2 * kPi * x.y); }
double lap_exact(Vec2 x) { return -20 * kPi * kPi * u_exact(x); }
Vec2 grad_exact(Vec2 x) {
  return {4 * kPi * std::cos(4 * kPi * x.x) * std::sin(2 * kPi * x.y),
          2 * kPi * std::sin(4 * kPi * x.x) * std::cos(2 * kPi * x.y)};
}

std::vector<double> sample(const ImmersedOperator& op) {
  const Grid2D& g = op.grid();
  std::vector<double> u(g.size(), 0.0);
  for (std::size_t p = 0; p < g.size(); ++p)
    if (op.mask()[p] != PointClass::Exterior) u[p] = u_exact(g.position(p));
  return u;
}

BoundaryData dirichlet_data(const ImmersedOperator& op) {
  BoundaryData d;
  for (const auto& cp : op.control_points()) d.push_back({u_exact(cp.position), 0.0});
  return d;
}

/// Max truncation error of L u + L_Gamma g - lap u over affected and
/// interior nodes.
std::pair<double, double> truncation(int nx, int n, int k) {
  const Grid2D g = Grid2D::unit_square(nx);
  ImmersedOperator op(g, star_geometry(), {n, k, Condition::Dirichlet, 1.0, 1.0});
  const auto u = sample(op);
  std::vector<double> out(g.size());
  op.apply(u, dirichlet_data(op), out);
  double affected = 0.0, interior = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double e = std::abs(out[p] - lap_exact(g.position(p)));
    if (op.mask()[p] == PointClass::Affected) affected = std::max(affected, e);
    if (op.mask()[p] == PointClass::Interior) interior = std::max(interior, e);
  }
  return {affected, interior};
}

}  // namespace

TEST_CASE("interior stencils are exact for polynomials up to their order") {
  for (int n : {2, 4, 6}) {
    CAPTURE(n);
    const StencilSpec s = interior_stencil(n);
    CHECK(s.half_width == n / 2);
    for (int m = 0; m <= n + 1; ++m) {
      double second = 0.0, first = 0.0;
      for (int j = -s.half_width; j <= s.half_width; ++j) {
        second += s.a(j) * std::pow(j, m);
        first += s.d(j) * std::pow(j, m);
      }
      CHECK(second == doctest::Approx(m == 2 ? 2.0 : 0.0).scale(1.0));
      if (m <= n) CHECK(first == doctest::Approx(m == 1 ? 1.0 : 0.0).scale(1.0));
    }
  }
  CHECK(interior_stencil(4).a(1) == doctest::Approx(4.0 / 3.0));
  CHECK(interior_stencil(4).a(2) == doctest::Approx(-1.0 / 12.0));
  CHECK_THROWS_AS(interior_stencil(3), Error);
}

TEST_CASE("symbol maxima") {
  CHECK(symbol_sigma_max(interior_stencil(2)) == doctest::Approx(4.0));
  CHECK(symbol_sigma_max(interior_stencil(4)) == doctest::Approx(16.0 / 3.0));
  CHECK(symbol_sigma_max(interior_stencil(6)) == doctest::Approx(6.0 + 4.0 / 90.0));
  // Low frequencies: sigma(k) ~ k^2.
  CHECK(symbol_sigma(interior_stencil(4), 1e-3) == doctest::Approx(1e-6).epsilon(1e-6));
}

TEST_CASE("affine row evaluation") {
  AffineRow row;
  row.nodes = {{0, 2.0}, {2, -1.0}};
  row.data = {{1, 3.0, 0.5}};
  const std::vector<double> u{1.0, 100.0, 4.0};
  const BoundaryData g{{0.0, 0.0}, {2.0, 10.0}};
  CHECK(row.evaluate(u, &g) == doctest::Approx(2.0 - 4.0 + 6.0 + 5.0));
  CHECK(row.evaluate(u, nullptr) == doctest::Approx(-2.0));
}

TEST_CASE("plain periodic Laplacian converges at the stencil order") {
  for (int n : {2, 4, 6}) {
    double prev = 0.0;
    for (int nx : {16, 32}) {
      const Grid2D g = Grid2D::unit_square(nx);
      ImmersedOperator op(g, std::nullopt, {n, 5, Condition::Dirichlet, 1.0, 1.0});
      CHECK(op.singular());
      const auto u = sample(op);
      std::vector<double> out(g.size());
      op.apply(u, out);
      double err = 0.0;
      for (std::size_t p = 0; p < g.size(); ++p) err = std::max(err, std::abs(out[p] - lap_exact(g.position(p))));
      if (prev > 0.0) CHECK(std::log2(prev / err) == doctest::Approx(n).epsilon(0.05));
      prev = err;
    }
  }
}

TEST_CASE("truncation error near the boundary decays at order k - 2") {
  const auto [a64, i64] = truncation(64, 4, 5);
  const auto [a128, i128] = truncation(128, 4, 5);
  CHECK(std::log2(a64 / a128) >= 2.5);
  CHECK(std::log2(i64 / i128) >= 3.7);
}

TEST_CASE("assembled matrix matches apply") {
  const Grid2D g = Grid2D::unit_square(32);
  for (Condition c : {Condition::Dirichlet, Condition::Neumann, Condition::Jump}) {
    ImmersedOperator op(g, star_geometry(), {4, 5, c, 1.0, 0.3});
    const auto m = op.assemble();
    const auto& idx = op.unknowns();
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> full(g.size(), 0.0), compact(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) full[idx[i]] = compact[i] = dist(rng);
    std::vector<double> out(g.size()), y(idx.size());
    op.apply(full, out);
    m.multiply(compact, y);
    double diff = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) diff = std::max(diff, std::abs(y[i] - out[idx[i]]));
    CHECK(diff <= 1e-9);
  }
}

TEST_CASE("constants are in the null space of Neumann and jump operators") {
  const Grid2D g = Grid2D::unit_square(64);
  for (Condition c : {Condition::Neumann, Condition::Jump}) {
    ImmersedOperator op(g, star_geometry(), {4, 5, c, 0.5, 1.0});
    CHECK(op.singular());
    std::vector<double> one(g.size(), 0.0), out(g.size());
    for (std::size_t p : op.unknowns()) one[p] = 1.0;
    op.apply(one, out);
    double m = 0.0;
    for (double v : out) m = std::max(m, std::abs(v));
    CHECK(m <= 1e-8);
  }
  ImmersedOperator d(g, star_geometry(), {4, 5, Condition::Dirichlet, 1.0, 1.0});
  CHECK_FALSE(d.singular());
}

TEST_CASE("Dirichlet flux and gradient converge for the exact field") {
  double prev_q = 0.0, prev_g = 0.0;
  for (int nx : {64, 128}) {
    const Grid2D g = Grid2D::unit_square(nx);
    ImmersedOperator op(g, star_geometry(), {4, 5, Condition::Dirichlet, 1.0, 1.0});
    const auto u = sample(op);
    const auto data = dirichlet_data(op);
    const auto q = op.boundary_quantity(u, data);
    double eq = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) {
      const auto& cp = op.control_points()[c];
      eq = std::max(eq, std::abs(q[c] - dot(cp.normal, grad_exact(cp.position))));
    }
    const auto grad = op.gradient(u, data);
    double eg = 0.0;
    for (std::size_t p : op.unknowns()) {
      const Vec2 ge = grad_exact(g.position(p));
      eg = std::max({eg, std::abs(grad[0][p] - ge.x), std::abs(grad[1][p] - ge.y)});
    }
    if (prev_q > 0.0) {
      CHECK(std::log2(prev_q / eq) >= 3.0);
      CHECK(std::log2(prev_g / eg) >= 3.0);
    }
    prev_q = eq;
    prev_g = eg;
  }
}

TEST_CASE("spectrum of the plain periodic Laplacian") {
  const Grid2D g = Grid2D::unit_square(32);
  ImmersedOperator op(g, std::nullopt, {2, 5, Condition::Dirichlet, 1.0, 1.0});
  const auto s = extremal_spectrum(op, 120);
  CHECK(s.min_real() >= -8.0 - 1e-8);
  CHECK(s.min_real() <= -7.9);
  CHECK(s.max_real() <= 1e-8);
  CHECK(s.max_real() >= -1e-8);
}

TEST_CASE("immersed operator spectrum stays in the left half plane") {
  const Grid2D g = Grid2D::unit_square(64);
  ImmersedOperator op(g, star_geometry(), {4, 5, Condition::Dirichlet, 1.0, 1.0});
  const auto s = extremal_spectrum(op, 150);
  CHECK(s.max_real() < 0.0);
  CHECK(s.min_real() >= -2.0 * symbol_sigma_max(op.spec()) - 1.0);
}

// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/SparseLU>
#include <cmath>
#include <numbers>

#include "iim/shortley_weller.hpp"

using namespace iim;

namespace {

constexpr double kPi = std::numbers::pi;

double u_exact(Vec2 x) { return std::sin(4 * kPi * x.x) * std::sin(2 * kPi * x.y); }
double lap_exact(Vec2 x) { return -20 * kPi * kPi * u_exact(x); }

/// Applies three point weights at offsets (-pm, 0, pp) to x^m.
double moment(const std::array<double, 3>& c, double pm, double pp, int m) {
  return c[0] * std::pow(-pm, m) + c[1] * (m == 0 ? 1.0 : 0.0) + c[2] * std::pow(pp, m);
}

/// Max error of the Dirichlet SW solution of lap u = f on the star exterior.
double sw_solve_error(int nx, bool shift) {
  const Grid2D g = Grid2D::unit_square(nx);
  SWOperator op(g, star_geometry(), {Condition::Dirichlet, 1.0, 1.0, shift});
  BoundaryData data;
  for (const auto& cp : op.control_points()) data.push_back({u_exact(cp.position), 0.0});
  const auto lg = op.boundary_term(data);
  const auto& idx = op.unknowns();
  const auto& m = op.matrix();
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) trip.emplace_back(r, m.col_index[k], m.values[k]);
  Eigen::SparseMatrix<double> a(idx.size(), idx.size());
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd b(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) b[i] = lap_exact(g.position(idx[i])) - lg[idx[i]];
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
  const Eigen::VectorXd x = lu.solve(b);
  double err = 0.0;
  for (std::size_t i = 0; i < idx.size(); ++i) err = std::max(err, std::abs(x[i] - u_exact(g.position(idx[i]))));
  return err;
}

}  // namespace

TEST_CASE("Dirichlet coefficients reproduce quadratics") {
  for (auto [pm, pp] : {std::pair{1.0, 1.0}, {0.3, 1.0}, {1.0, 0.05}, {0.5, 0.7}}) {
    const auto c = sw_dirichlet_coeffs(pm, pp);
    CHECK(moment(c, pm, pp, 0) == doctest::Approx(0.0).scale(1.0));
    CHECK(moment(c, pm, pp, 1) == doctest::Approx(0.0).scale(1.0));
    CHECK(moment(c, pm, pp, 2) == doctest::Approx(2.0));
  }
  const auto reg = sw_dirichlet_coeffs(1.0, 1.0);
  CHECK(reg[0] == doctest::Approx(1.0));
  CHECK(reg[1] == doctest::Approx(-2.0));
  CHECK(reg[2] == doctest::Approx(1.0));
}

TEST_CASE("Neumann coefficients reproduce quadratics") {
  // Wall at -pm for case A, at +pp for case B, both for case C.
  auto apply = [](const SWNeumannCoeffs& c, double pm, double pp, auto u, auto du) {
    return c.flux_minus * du(-pm) + c.u_left * u(-pm) + c.u_centre * u(0.0) + c.u_right * u(pp) +
           c.flux_plus * du(pp);
  };
  for (auto [pm, pp] : {std::pair{0.5, 1.0}, {0.8, 0.6}, {1.0, 0.5}}) {
    for (NeumannCase which : {NeumannCase::A, NeumannCase::B, NeumannCase::C}) {
      const auto c = sw_neumann_coeffs(which, pm, pp);
      CHECK(apply(c, pm, pp, [](double) { return 1.0; }, [](double) { return 0.0; }) ==
            doctest::Approx(0.0).scale(1.0));
      CHECK(apply(c, pm, pp, [](double x) { return x; }, [](double) { return 1.0; }) ==
            doctest::Approx(0.0).scale(1.0));
      CHECK(apply(c, pm, pp, [](double x) { return x * x; }, [](double x) { return 2 * x; }) ==
            doctest::Approx(2.0));
    }
  }
}

TEST_CASE("interface wall values satisfy both jump relations") {
  const double pm = 0.3, pp = 0.7, bm = 2.0, bp = 0.25, j0 = 0.4, j1 = -1.1, um = 0.9, up = -0.2,
               dx = 0.01;
  const auto [wp, wm] = sw_interface_wall_values(pm, pp, bm, bp, j0, j1, um, up, dx);
  CHECK(wp - wm == doctest::Approx(j0));
  CHECK(bp * (up - wp) / (pp * dx) - bm * (wm - um) / (pm * dx) == doctest::Approx(j1));
}

TEST_CASE("shifting pushes boundary crossings to at least half a cell") {
  const Grid2D g = Grid2D::unit_square(64);
  const auto cps = shift_intersections(find_control_points(g, star_geometry()));
  for (const auto& cp : cps) {
    REQUIRE(cp.shifted.has_value());
    const auto [lo, hi] = *cp.shifted;
    CHECK(lo + hi == doctest::Approx(1.0));
    // The in-domain (plus) node keeps at least dx/2.
    CHECK((cp.lower_side == Side::Plus ? lo : hi) >= 0.5 - 1e-14);
  }
  const auto jumps = shift_intersections(find_control_points(g, star_geometry(), Condition::Jump));
  for (const auto& cp : jumps) CHECK(cp.shifted->first == doctest::Approx(0.5));
}

TEST_CASE("unshifted Shortley-Weller solution is second order") {
  const double e32 = sw_solve_error(32, false);
  const double e64 = sw_solve_error(64, false);
  CHECK(std::log2(e32 / e64) >= 1.7);
  // Shifted walls move the boundary by up to dx/2; the error stays bounded.
  CHECK(sw_solve_error(64, true) < 0.1);
}

TEST_CASE("Neumann SW operator annihilates constants away from pinned nodes") {
  const Grid2D g = Grid2D::unit_square(64);
  SWOperator op(g, star_geometry(), {Condition::Neumann, 1.0, 1.0, true});
  CHECK(op.singular());
  std::vector<double> one(g.size(), 0.0), out(g.size());
  for (std::size_t p : op.unknowns()) one[p] = 1.0;
  op.apply(one, out);
  std::size_t nonzero = 0;
  for (double v : out) nonzero += std::abs(v) > 1e-9;
  CHECK(nonzero == op.isolated_count());
}

TEST_CASE("apply equals matrix plus boundary term") {
  const Grid2D g = Grid2D::unit_square(32);
  for (Condition c : {Condition::Dirichlet, Condition::Neumann, Condition::Jump}) {
    SWOperator op(g, star_geometry(), {c, 0.5, 2.0, true});
    BoundaryData data;
    for (std::size_t i = 0; i < op.control_points().size(); ++i) data.push_back({0.1 * i, -0.05 * i});
    std::vector<double> u(g.size(), 0.0);
    for (std::size_t p : op.unknowns()) u[p] = std::cos(3.0 * p);
    std::vector<double> full(g.size()), lin(g.size());
    op.apply(u, data, full);
    op.apply(u, lin);
    const auto lg = op.boundary_term(data);
    double diff = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) diff = std::max(diff, std::abs(full[p] - lin[p] - lg[p]));
    CHECK(diff <= 1e-8 * (1.0 + std::abs(lg[0])) * g.size());
  }
}

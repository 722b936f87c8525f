// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "iim/error.hpp"
#include "iim/geometry.hpp"
#include "iim/grid.hpp"

using namespace iim;

TEST_CASE("grid indexing and periodic offsets") {
  const Grid2D g = Grid2D::unit_square(16);
  CHECK(g.dx == doctest::Approx(1.0 / 16));
  const std::size_t p = g.index(3, 5);
  CHECK(g.i_of(p) == 3);
  CHECK(g.j_of(p) == 5);
  CHECK(*g.offset(g.index(0, 2), 0, -1) == g.index(15, 2));
  CHECK(*g.offset(g.index(4, 15), 1, 2) == g.index(4, 1));
  const Grid2D closed = Grid2D::unit_square(16, false);
  CHECK_FALSE(closed.offset(closed.index(0, 0), 0, -1).has_value());
}

TEST_CASE("masked mean and zero-mean projection skip exterior nodes") {
  std::vector<double> v{1, 2, 3, 100};
  const std::vector<PointClass> mask{PointClass::Interior, PointClass::Affected, PointClass::Interior,
                                     PointClass::Exterior};
  CHECK(masked_mean(v, mask) == doctest::Approx(2.0));
  v[3] = 0.0;
  project_zero_mean(v, mask);
  CHECK(v[0] == doctest::Approx(-1.0));
  CHECK(v[3] == 0.0);
  CHECK(masked_norm(v, mask, NormKind::Linf) == doctest::Approx(1.0));
}

TEST_CASE("control points lie on the zero set with consistent spacings") {
  const Grid2D g = Grid2D::unit_square(64);
  const LevelSetGeometry star = star_geometry();
  const auto cps = find_control_points(g, star);
  REQUIRE(cps.size() > 100);
  for (const auto& cp : cps) {
    CHECK(std::abs(star.phi(cp.position)) <= 1e-10);
    CHECK(cp.psi_lower + cp.psi_upper == doctest::Approx(1.0));
    CHECK(std::abs(norm(cp.normal) - 1.0) <= 1e-12);
    // Crossing sits psi_lower dx from the lower node along the axis.
    const Vec2 lower = g.position(cp.lower);
    CHECK(std::abs(cp.position[cp.axis] - lower[cp.axis] - cp.psi_lower * g.dx) <= 1e-12);
    CHECK(side_of(star.phi(lower)) == cp.lower_side);
  }
}

TEST_CASE("classification of the star exterior") {
  const Grid2D g = Grid2D::unit_square(64);
  const LevelSetGeometry star = star_geometry();
  const auto mask = classify_points(g, &star, 2);
  std::size_t affected = 0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double phi = star.phi(g.position(p));
    if (phi < 0.0) CHECK(mask[p] == PointClass::Exterior);
    if (mask[p] == PointClass::Affected) {
      ++affected;
      bool crosses = false;
      for (int axis = 0; axis < 2; ++axis)
        for (int t = -2; t <= 2; ++t) crosses = crosses || star.phi(g.position(*g.offset(p, axis, t))) < 0.0;
      CHECK(crosses);
    }
  }
  CHECK(affected > 0);
  const auto two = classify_points(g, &star, 2, true);
  for (auto c : two) CHECK(c != PointClass::Exterior);
}

TEST_CASE("curvature constraint holds on fine grids and fails on coarse ones") {
  const LevelSetGeometry star = star_geometry();
  CHECK(check_curvature_constraint(star, 1.0 / 64));
  CHECK_FALSE(check_curvature_constraint(star, 1.0 / 8));
  // Circle of radius r: kappa = 1/r.
  const LevelSetGeometry c = circle_geometry({0.5, 0.5}, 0.25);
  CHECK(max_boundary_curvature(c, 1.0 / 64) == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("make_geometry builds named shapes") {
  const auto c = make_geometry("circle", {{"r", 0.3}});
  CHECK(c.phi({0.5, 0.5}) < 0.0);
  CHECK_THROWS_AS(make_geometry("torus", {}), Error);
}

// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <regex>

#include "iim/error.hpp"
#include "iim/harness.hpp"

using namespace iim;

TEST_CASE("run files parse, override and round-trip through describe") {
  const RunSpec spec = parse_run_spec(R"(# comment
study = iterations
bc = neumann
order = 6
border = 7
nx = 64,128
beta_plus = 0.5
preconditioner = mg,iim44
cycle = w
)");
  CHECK(spec.study == StudyKind::Iterations);
  CHECK(spec.condition == Condition::Neumann);
  CHECK(spec.order == 6);
  CHECK(spec.boundary_order == 7);
  CHECK(spec.resolutions == std::vector<int>{64, 128});
  CHECK(spec.preconditioners == std::vector<std::string>{"mg", "iim44"});
  CHECK(spec.cycle == CycleKind::W);

  RunSpec copy = spec;
  set_option(copy, "order", "4");
  CHECK(copy.order == 4);

  const std::string text = std::regex_replace(describe(spec), std::regex("; "), "\n");
  CHECK(describe(parse_run_spec(text)) == describe(spec));

  RunSpec bad;
  CHECK_THROWS_AS(set_option(bad, "colour", "red"), Error);
  CHECK_THROWS_AS(set_option(bad, "order", "four"), Error);
  bad.boundary_order = 9;
  CHECK_THROWS_AS(validate(bad), Error);
  bad.order = 3;
  bad.boundary_order = 5;
  CHECK_THROWS_AS(validate(bad), Error);
  bad.order = 4;
  bad.boundary_order = 5;
  bad.resolutions = {96};
  CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("manufactured derivatives agree with finite differences") {
  for (const char* name : {"sine", "interface"}) {
    const auto mc = manufactured_case(name);
    const double h = 1e-4;
    for (Side s : {Side::Plus, Side::Minus}) {
      for (Vec2 x : {Vec2{0.1, 0.7}, Vec2{0.43, 0.25}, Vec2{0.9, 0.05}}) {
        const double ux = (mc.u({x.x + h, x.y}, s) - mc.u({x.x - h, x.y}, s)) / (2 * h);
        const double uy = (mc.u({x.x, x.y + h}, s) - mc.u({x.x, x.y - h}, s)) / (2 * h);
        const double lap = (mc.u({x.x + h, x.y}, s) + mc.u({x.x - h, x.y}, s) + mc.u({x.x, x.y + h}, s) +
                            mc.u({x.x, x.y - h}, s) - 4 * mc.u(x, s)) /
                           (h * h);
        CHECK(mc.gradient(x, s).x == doctest::Approx(ux).epsilon(1e-6));
        CHECK(mc.gradient(x, s).y == doctest::Approx(uy).epsilon(1e-6));
        CHECK(mc.laplacian(x, s) == doctest::Approx(lap).epsilon(1e-4));
      }
    }
  }
  CHECK_THROWS_AS(manufactured_case("cubic"), Error);
}

TEST_CASE("field dumps round-trip") {
  const auto path = (std::filesystem::temp_directory_path() / "iim_roundtrip.fld").string();
  std::vector<double> v(12);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-double(i)) - 0.5;
  write_field(path, 4, 3, v);
  const FieldDump d = read_field(path);
  CHECK(d.nx == 4);
  CHECK(d.ny == 3);
  CHECK(d.values == v);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_field(path), Error);
}

TEST_CASE("CSV output is deterministic and carries the run spec") {
  RunSpec spec;
  spec.study = StudyKind::Truncation;
  spec.resolutions = {32, 64};
  const std::string a = format_csv(to_table(run_truncation(spec)), spec);
  const std::string b = format_csv(to_table(run_truncation(spec)), spec);
  CHECK(a == b);
  CHECK(a.find("# runspec: ") != std::string::npos);
  CHECK(a.substr(0, a.find('\n')).find("nx") != std::string::npos);
}

TEST_CASE("fitted order of an exact power law") {
  CHECK(fitted_order({64, 128, 256}, {1.0, 1.0 / 16, 1.0 / 256}) == doctest::Approx(4.0));
}

TEST_CASE("interface problem error decreases under refinement") {
  RunSpec spec;
  spec.condition = Condition::Jump;
  spec.beta_plus = 0.5;
  spec.resolutions = {64, 128};
  spec.tolerance = 1e-12;
  const auto r = run_converge(spec);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].converged);
  CHECK(r.rows[1].converged);
  CHECK(r.rows[1].errors.solution < r.rows[0].errors.solution / 8);
}

TEST_CASE("Neumann solve satisfies the sum constraint") {
  RunSpec spec;
  spec.condition = Condition::Neumann;
  spec.resolutions = {64};
  spec.gamma = 2.0;
  const auto r = run_converge(spec);
  CHECK(r.rows[0].converged);
  CHECK(std::abs(r.rows[0].constraint_residual) <= r.rows[0].constraint_bound);
}

TEST_CASE("unpreconditioned GMRES reaches the iteration cap") {
  RunSpec spec;
  spec.study = StudyKind::Iterations;
  spec.resolutions = {256};
  spec.preconditioners = {"none"};
  spec.max_iterations = 100;
  const auto r = run_iterations(spec);
  REQUIRE(r.rows.size() == 1);
  CHECK_FALSE(r.rows[0].converged);
  CHECK(r.rows[0].iterations == 100);
}

TEST_CASE("unknown preconditioner names are rejected") {
  RunSpec spec;
  const Grid2D g = Grid2D::unit_square(64);
  OperatorConfig cfg;
  Problem p(g, star_geometry(), cfg, manufactured_case("sine"));
  CHECK_THROWS_AS(make_preconditioner(p, "ilu", spec), Error);
  CHECK(make_preconditioner(p, "iim44", spec).map.has_value());
}

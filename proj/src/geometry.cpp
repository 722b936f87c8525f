// SPDX-License-Identifier: Apache-2.0
#include "iim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "iim/error.hpp"

namespace iim {

LevelSetGeometry::LevelSetGeometry(std::string name, ScalarFn phi, VectorFn gradient,
                                   ScalarFn curvature, std::map<std::string, double> parameters,
                                   CurveFn boundary_curve)
    : name_(std::move(name)),
      phi_(std::move(phi)),
      gradient_(std::move(gradient)),
      curvature_(std::move(curvature)),
      parameters_(std::move(parameters)),
      boundary_curve_(std::move(boundary_curve)) {}

Vec2 LevelSetGeometry::normal(Vec2 x) const {
  const Vec2 g = gradient_(x);
  const double len = norm(g);
  if (len == 0.0) return {0.0, 0.0};
  return (1.0 / len) * g;
}

LevelSetGeometry circle_geometry(Vec2 center, double radius) {
  auto phi = [=](Vec2 x) { return norm(x - center) - radius; };
  auto grad = [=](Vec2 x) {
    const Vec2 d = x - center;
    const double r = norm(d);
    return r > 0.0 ? (1.0 / r) * d : Vec2{0.0, 0.0};
  };
  auto kappa = [=](Vec2) { return 1.0 / radius; };
  auto curve = [=](double t) {
    const double th = 2.0 * std::numbers::pi * t;
    return center + radius * Vec2{std::cos(th), std::sin(th)};
  };
  return LevelSetGeometry("circle", phi, grad, kappa,
                          {{"cx", center.x}, {"cy", center.y}, {"r", radius}}, curve);
}

LevelSetGeometry star_geometry(Vec2 center, double r0, double r_tilde) {
  if (!(r_tilde < r0)) throw Error(ErrorCode::InvalidArgument, "star needs r_tilde < r0");
  constexpr double lobes = 5.0;
  auto radius = [=](double th) { return r0 + r_tilde * std::cos(lobes * th); };
  auto phi = [=](Vec2 x) {
    const Vec2 d = x - center;
    return norm(d) - radius(std::atan2(d.y, d.x));
  };
  auto grad = [=](Vec2 x) {
    const Vec2 d = x - center;
    const double rho = norm(d);
    if (rho == 0.0) return Vec2{0.0, 0.0};
    const double th = std::atan2(d.y, d.x);
    const double dr = -lobes * r_tilde * std::sin(lobes * th);
    const Vec2 er = (1.0 / rho) * d;
    const Vec2 et{-er.y, er.x};
    return er - (dr / rho) * et;
  };
  // Curvature of the zero set at the polar angle of x.
  auto kappa = [=](Vec2 x) {
    const Vec2 d = x - center;
    const double th = std::atan2(d.y, d.x);
    const double r = radius(th);
    const double dr = -lobes * r_tilde * std::sin(lobes * th);
    const double ddr = -lobes * lobes * r_tilde * std::cos(lobes * th);
    return (r * r + 2.0 * dr * dr - r * ddr) / std::pow(r * r + dr * dr, 1.5);
  };
  auto curve = [=](double t) {
    const double th = 2.0 * std::numbers::pi * t;
    return center + radius(th) * Vec2{std::cos(th), std::sin(th)};
  };
  return LevelSetGeometry("star", phi, grad, kappa,
                          {{"cx", center.x}, {"cy", center.y}, {"r0", r0}, {"r_tilde", r_tilde}},
                          curve);
}

LevelSetGeometry line_geometry(Vec2 point, Vec2 normal) {
  const Vec2 n = (1.0 / norm(normal)) * normal;
  auto phi = [=](Vec2 x) { return dot(n, x - point); };
  auto grad = [=](Vec2) { return n; };
  auto kappa = [](Vec2) { return 0.0; };
  return LevelSetGeometry("line", phi, grad, kappa,
                          {{"px", point.x}, {"py", point.y}, {"nx", n.x}, {"ny", n.y}});
}

LevelSetGeometry make_geometry(const std::string& name, const std::map<std::string, double>& params) {
  auto get = [&](const char* key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (name == "star")
    return star_geometry({get("cx", 0.501), get("cy", 0.502)}, get("r0", 0.28), get("r_tilde", 0.025));
  if (name == "circle") return circle_geometry({get("cx", 0.5), get("cy", 0.5)}, get("r", 0.25));
  if (name == "line") return line_geometry({get("px", 0.5), get("py", 0.5)}, {get("nx", 1.0), get("ny", 0.0)});
  throw Error(ErrorCode::InvalidArgument, "unknown geometry '" + name + "'");
}

namespace {

constexpr int kEdgeSamples = 8;
constexpr int kBisectionSteps = 40;
constexpr double kNodeNudge = 1e-6;

}  // namespace

std::vector<ControlPoint> find_control_points(const Grid2D& grid, const LevelSetGeometry& geometry,
                                              Condition kind) {
  std::vector<double> phi(grid.size());
  for (std::size_t idx = 0; idx < grid.size(); ++idx) phi[idx] = geometry.phi(grid.position(idx));

  std::vector<ControlPoint> out;
  for (int axis = 0; axis < 2; ++axis) {
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
      const auto up = grid.offset(idx, axis, 1);
      if (!up) continue;
      const Vec2 p0 = grid.position(idx);
      Vec2 step{0.0, 0.0};
      step[axis] = grid.dx;
      auto along = [&](double s) { return geometry.phi(p0 + s * step); };

      int changes = 0;
      Side prev = side_of(phi[idx]);
      for (int k = 1; k <= kEdgeSamples; ++k) {
        const double v = k == kEdgeSamples ? phi[*up] : along(static_cast<double>(k) / kEdgeSamples);
        const Side cur = side_of(v);
        if (cur != prev) ++changes;
        prev = cur;
      }
      if (changes > 1)
        throw Error(ErrorCode::MultipleCrossings,
                    "edge at node " + std::to_string(idx) + " axis " + std::to_string(axis));
      const Side s0 = side_of(phi[idx]);
      if (s0 == side_of(phi[*up])) continue;

      double a = 0.0, b = 1.0;
      double fa = phi[idx], fb = phi[*up];
      const double tol = 1e-12 * std::max(std::abs(fa), std::abs(fb));
      double root = 0.5;
      bool done = false;
      if (fa == 0.0) {
        root = 0.0;
        done = true;
      }
      for (int it = 0; it < kBisectionSteps && !done; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = along(mid);
        if (std::abs(fm) <= tol) {
          root = mid;
          done = true;
          break;
        }
        if (side_of(fm) == s0) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
          fb = fm;
        }
      }
      if (!done) root = (fa != fb) ? a + (b - a) * fa / (fa - fb) : 0.5 * (a + b);

      ControlPoint cp;
      cp.axis = axis;
      cp.lower = idx;
      cp.upper = *up;
      cp.lower_side = s0;
      // Crossings on a node are nudged towards the minus side.
      cp.psi_lower = std::clamp(root, kNodeNudge, 1.0 - kNodeNudge);
      cp.psi_upper = 1.0 - cp.psi_lower;
      cp.position = p0 + cp.psi_lower * step;
      cp.normal = geometry.normal(cp.position);
      cp.kind = kind;
      out.push_back(cp);
    }
  }
  return out;
}

double max_boundary_curvature(const LevelSetGeometry& geometry, double dx, std::size_t samples) {
  double kmax = 0.0;
  if (geometry.boundary_curve()) {
    for (std::size_t s = 0; s < samples; ++s) {
      const Vec2 x = geometry.boundary_curve()(static_cast<double>(s) / static_cast<double>(samples));
      kmax = std::max(kmax, std::abs(geometry.curvature(x)));
    }
    return kmax;
  }
  const int n = std::max(8, static_cast<int>(std::lround(1.0 / dx)));
  for (const auto& cp : find_control_points(Grid2D::unit_square(n, false), geometry))
    kmax = std::max(kmax, std::abs(geometry.curvature(cp.position)));
  return kmax;
}

bool check_curvature_constraint(const LevelSetGeometry& geometry, double dx, std::size_t samples) {
  return max_boundary_curvature(geometry, dx, samples) * dx < 0.25;
}

}  // namespace iim

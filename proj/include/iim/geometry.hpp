// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iim/grid.hpp"

namespace iim {

/// Which side of the zero set a point belongs to. phi >= 0 is PLUS.
enum class Side { Plus, Minus };

inline Side side_of(double phi) { return phi >= 0.0 ? Side::Plus : Side::Minus; }
inline Side opposite(Side s) { return s == Side::Plus ? Side::Minus : Side::Plus; }

enum class Condition { Dirichlet, Neumann, Jump };

/// Level-set description of an immersed surface. phi > 0 in Omega+.
class LevelSetGeometry {
 public:
  using ScalarFn = std::function<double(Vec2)>;
  using VectorFn = std::function<Vec2(Vec2)>;
  using CurveFn = std::function<Vec2(double)>;

  LevelSetGeometry(std::string name, ScalarFn phi, VectorFn gradient, ScalarFn curvature,
                   std::map<std::string, double> parameters = {},
                   CurveFn boundary_curve = {});

  const std::string& name() const { return name_; }
  const std::map<std::string, double>& parameters() const { return parameters_; }

  double phi(Vec2 x) const { return phi_(x); }
  Vec2 gradient(Vec2 x) const { return gradient_(x); }
  /// Unit normal pointing towards increasing phi.
  Vec2 normal(Vec2 x) const;
  /// Signed curvature of the level set through x.
  double curvature(Vec2 x) const { return curvature_(x); }
  /// Parametrisation t in [0, 1) -> point on the zero set, when available.
  const CurveFn& boundary_curve() const { return boundary_curve_; }

 private:
  std::string name_;
  ScalarFn phi_;
  VectorFn gradient_;
  ScalarFn curvature_;
  std::map<std::string, double> parameters_;
  CurveFn boundary_curve_;
};

/// phi = |x - center| - radius (Omega+ outside the disk).
LevelSetGeometry circle_geometry(Vec2 center, double radius);

/// Five-lobed star phi = |x - x0| - (r0 + r_tilde cos 5 theta).
LevelSetGeometry star_geometry(Vec2 center = {0.501, 0.502}, double r0 = 0.28,
                               double r_tilde = 0.025);

/// Straight line through `point` with unit normal `normal`; phi = n.(x - p).
LevelSetGeometry line_geometry(Vec2 point, Vec2 normal);

/// Builds a geometry by name: "circle" (cx, cy, r), "star" (cx, cy, r0,
/// r_tilde), "line" (px, py, nx, ny). Missing parameters use the defaults.
LevelSetGeometry make_geometry(const std::string& name, const std::map<std::string, double>& params);

/// Intersection of a grid line with the zero set.
struct ControlPoint {
  Vec2 position;
  int axis = 0;
  /// Flanking nodes: `lower` at the smaller coordinate along `axis`.
  std::size_t lower = 0;
  std::size_t upper = 0;
  /// Distance from the lower/upper node to the crossing in units of dx.
  double psi_lower = 0.5;
  double psi_upper = 0.5;
  Vec2 normal;
  Condition kind = Condition::Dirichlet;
  /// Side of phi the lower node lies on.
  Side lower_side = Side::Plus;
  /// Shifted fractional spacings (set by the Shortley-Weller shifting rule).
  std::optional<std::pair<double, double>> shifted;

  Side upper_side() const { return opposite(lower_side); }
  std::size_t node_on(Side s) const { return s == lower_side ? lower : upper; }
  double psi_on(Side s) const { return s == lower_side ? psi_lower : psi_upper; }
};

/// Every sign change of phi between adjacent nodes along either axis, with
/// the crossing located by bisection. Throws MULTIPLE_CROSSINGS when one cell
/// edge hides more than one sign change.
std::vector<ControlPoint> find_control_points(const Grid2D& grid, const LevelSetGeometry& geometry,
                                              Condition kind = Condition::Dirichlet);

/// max |kappa dx| < 1/4 over samples of the zero set.
bool check_curvature_constraint(const LevelSetGeometry& geometry, double dx,
                                std::size_t samples = 10000);

/// Largest |kappa| found on the zero set (sampled parametrisation, or the
/// control points of a grid with spacing dx when none is available).
double max_boundary_curvature(const LevelSetGeometry& geometry, double dx,
                              std::size_t samples = 10000);

}  // namespace iim

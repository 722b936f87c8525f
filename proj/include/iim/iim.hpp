// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "iim/geometry.hpp"
#include "iim/grid.hpp"
#include "iim/linalg.hpp"

namespace iim {

/// Number of 2D monomials of total degree < k.
constexpr std::size_t monomial_count(int k) { return static_cast<std::size_t>(k * (k + 1) / 2); }

/// Grid nodes used for the least-squares polynomial at one control point.
/// Offsets are measured from the control point in units of dx.
struct InterpolationSet {
  Vec2 center;
  Vec2 normal;
  Side side = Side::Plus;
  int order = 3;
  double semi_tangential = 0.0;  // in units of dx
  double semi_normal = 0.0;
  std::vector<std::size_t> nodes;
  std::vector<Vec2> offsets;
};

/// Nodes of `side` inside a half-ellipse around the control point, skipping
/// the node nearest to the crossing. Starts with semi-axes (k, k) dx along
/// (tangent, normal) and grows them by 1.3 up to three times until at least
/// 2 m nodes are found; throws INSUFFICIENT_POINTS otherwise.
/// `first_growth` skips the first growth steps, which lets callers retry with
/// a larger region when the fit on the smaller one is rank deficient.
InterpolationSet collect_interpolation_points(const ControlPoint& cp, const Grid2D& grid,
                                              const LevelSetGeometry& geometry, int k, Side side,
                                              int first_growth = 0);

/// Number of growth steps allowed by collect_interpolation_points.
inline constexpr int kMaxInterpolationGrowth = 3;

/// Linear functional in the control-point value and the set's node values.
struct StencilRow {
  double at_control = 0.0;
  std::vector<double> at_nodes;

  double apply(double control_value, std::span<const double> node_values) const;
};

/// Least-squares fit of all monomials of degree < k through the control
/// point and the set's nodes, in coordinates scaled by dx. Holds the single
/// QR factorization used for every stencil at this control point.
class PolynomialFit {
 public:
  /// Throws RANK_DEFICIENT when the scaled system has numerical rank < m.
  explicit PolynomialFit(InterpolationSet set);

  const InterpolationSet& set() const { return set_; }
  /// Weights reproducing p(x_c + dx * offset).
  StencilRow evaluate(Vec2 offset) const;
  /// Weights reproducing beta * dp/dn at the control point.
  StencilRow normal_derivative(double dx, double beta = 1.0) const;

 private:
  StencilRow from_monomial_values(std::span<const double> v) const;

  InterpolationSet set_;
  linalg::PivotedQR qr_;
};

/// Instrumentation for the per-control-point work.
struct StencilCounters {
  std::atomic<long> factorizations{0};
  std::atomic<long> stencils{0};

  void reset() {
    factorizations = 0;
    stencils = 0;
  }
};

StencilCounters& stencil_counters();

struct GhostRequest {
  std::size_t node = 0;
  Vec2 offset;  // from the control point, units of dx
};

/// All stencils attached to one control point and side.
struct StencilSet {
  struct Ghost {
    std::size_t node = 0;
    StencilRow row;
  };
  std::vector<std::size_t> nodes;
  std::vector<Ghost> ghosts;
  /// beta * d/dn at the control point (beta = 1 for interface sides).
  StencilRow normal;
  Condition kind = Condition::Dirichlet;
};

/// One factorization, then one stencil per requested ghost node plus the
/// normal-derivative stencil when `with_normal` is set (Dirichlet ghosts do
/// not need it). Neumann sets with s_c == 0 are rejected with
/// SINGULAR_WALL_STENCIL when the inversion is attempted.
StencilSet build_stencils(const InterpolationSet& set, Condition kind,
                          std::span<const GhostRequest> ghosts, double dx, double beta,
                          bool with_normal);

/// u(x_c) = (q_bar - sum s_i u_i) / s_c.
double neumann_wall_value(const StencilSet& set, double q_bar, std::span<const double> u_samples);

/// Wall values (u+(x_c), u-(x_c)) from the discrete jump system
/// u+ - u- = j0 and beta+ dn u+ - beta- dn u- = j1. The stencil sets carry
/// plain d/dn weights.
std::pair<double, double> interface_wall_values(const StencilSet& plus, const StencilSet& minus,
                                                double beta_plus, double beta_minus, double j0,
                                                double j1, std::span<const double> u_plus,
                                                std::span<const double> u_minus);

}  // namespace iim

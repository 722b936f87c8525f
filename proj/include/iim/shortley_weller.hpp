// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "iim/geometry.hpp"
#include "iim/grid.hpp"
#include "iim/linalg.hpp"
#include "iim/operator.hpp"

namespace iim {

/// Moves boundary crossings closer than dx/2 to the in-domain node out to
/// exactly dx/2 and puts interface crossings at the edge midpoint. The result
/// is stored in ControlPoint::shifted as (psi_lower, psi_upper).
std::vector<ControlPoint> shift_intersections(std::vector<ControlPoint> points);

/// Three-point coefficients (wall-, centre, wall+) times dx^2 for walls at
/// fractional distances psi- and psi+. A regular side uses psi = 1.
std::array<double, 3> sw_dirichlet_coeffs(double psi_minus, double psi_plus);

enum class NeumannCase {
  A,  // wall on the left
  B,  // wall on the right
  C,  // walls on both sides
};

/// Second-derivative coefficients times dx^2 for Neumann walls. The flux
/// coefficients multiply dx * du/dx at the corresponding wall.
struct SWNeumannCoeffs {
  double flux_minus = 0.0;
  double u_left = 0.0;
  double u_centre = 0.0;
  double u_right = 0.0;
  double flux_plus = 0.0;
};
SWNeumannCoeffs sw_neumann_coeffs(NeumannCase which, double psi_minus, double psi_plus);

/// First-order wall values (u_w+, u_w-) on a grid edge split by an interface,
/// psi± being the distances from the plus / minus node. Uses
/// u_w+ - u_w- = j0 and beta+ (u_plus - u_w+)/dx+ - beta- (u_w- - u_minus)/dx-
/// = j1 measured along the edge from the minus to the plus node.
std::pair<double, double> sw_interface_wall_values(double psi_minus, double psi_plus,
                                                   double beta_minus, double beta_plus, double j0,
                                                   double j1, double u_minus, double u_plus,
                                                   double dx);

struct SWConfig {
  Condition condition = Condition::Dirichlet;
  double beta_plus = 1.0;
  double beta_minus = 1.0;
  /// Off only for accuracy studies; shifting is what makes SW a good
  /// preconditioner.
  bool shift = true;
};

/// Dimension-split Shortley-Weller Laplacian. For jump problems it
/// discretises lap u = f / beta on each side.
class SWOperator {
 public:
  SWOperator(const Grid2D& grid, std::optional<LevelSetGeometry> geometry, SWConfig config);

  const Grid2D& grid() const { return grid_; }
  const SWConfig& config() const { return config_; }
  const std::optional<LevelSetGeometry>& geometry() const { return geometry_; }
  const std::vector<PointClass>& mask() const { return mask_; }
  const std::vector<ControlPoint>& control_points() const { return cps_; }
  const std::vector<std::size_t>& unknowns() const { return unknowns_; }
  /// Position of `node` in unknowns(), or -1 for exterior nodes.
  std::ptrdiff_t unknown_index(std::size_t node) const { return unknown_of_[node]; }
  Side side(std::size_t node) const { return sides_[node]; }
  bool singular() const;
  std::size_t isolated_count() const { return isolated_; }

  /// Linear part over unknowns().
  const linalg::SparseMatrix& matrix() const { return matrix_; }
  /// Full-grid application with boundary data; exterior entries are 0.
  void apply(std::span<const double> u, const BoundaryData& g, std::span<double> out) const;
  void apply(std::span<const double> u, std::span<double> out) const;
  std::vector<double> boundary_term(const BoundaryData& g) const;

 private:
  struct Wall {
    std::size_t cp = 0;
    double psi = 1.0;
  };
  void build();
  /// The wall value seen from `node` at control point `c` as an affine form.
  void add_wall_value(std::size_t node, const Wall& w, double scale, AffineRow& row) const;

  Grid2D grid_;
  std::optional<LevelSetGeometry> geometry_;
  SWConfig config_;
  std::vector<PointClass> mask_;
  std::vector<Side> sides_;
  std::vector<ControlPoint> cps_;
  std::vector<std::size_t> unknowns_;
  std::vector<std::ptrdiff_t> unknown_of_;
  std::vector<AffineRow> rows_;  // per unknown, columns are node indices
  linalg::SparseMatrix matrix_;
  std::size_t isolated_ = 0;
};

}  // namespace iim

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "iim/geometry.hpp"
#include "iim/grid.hpp"
#include "iim/iim.hpp"
#include "iim/linalg.hpp"

namespace iim {

/// Centered 1D stencils of order n. Coefficients are stored for j = -w..w.
struct StencilSpec {
  int order = 2;
  int half_width = 1;
  std::vector<double> second;  // d^2/dx^2 times dx^2
  std::vector<double> first;   // d/dx times dx

  double a(int j) const { return second[static_cast<std::size_t>(j + half_width)]; }
  double d(int j) const { return first[static_cast<std::size_t>(j + half_width)]; }
};

/// Throws UNSUPPORTED_ORDER unless n is 2, 4 or 6.
StencilSpec interior_stencil(int order);

/// sigma(k) = 2 sum_{j=1..w} a_j (1 - cos(j k)) >= 0. The scaled 1D second
/// derivative acts on exp(i k j) as multiplication by -sigma(k).
double symbol_sigma(const StencilSpec& spec, double ktheta);

/// Maximum of symbol_sigma over a uniform sampling of [0, pi].
double symbol_sigma_max(const StencilSpec& spec, int samples = 20001);

struct OperatorConfig {
  int order = 4;           // interior stencil order n
  int boundary_order = 5;  // interpolant order k
  Condition condition = Condition::Dirichlet;
  double beta_plus = 1.0;
  double beta_minus = 1.0;
};

/// Data attached to one control point. Dirichlet uses `value`, Neumann uses
/// `flux` (beta dn u), jumps use value = [u] and flux = [beta dn u], with the
/// jump taken as plus minus minus and n pointing into the plus side.
struct ControlData {
  double value = 0.0;
  double flux = 0.0;
};
using BoundaryData = std::vector<ControlData>;

/// Linear form in node values and control-point data.
struct AffineRow {
  struct DataTerm {
    std::size_t cp = 0;
    double on_value = 0.0;
    double on_flux = 0.0;
  };
  std::vector<std::pair<std::size_t, double>> nodes;
  std::vector<DataTerm> data;

  double evaluate(std::span<const double> u, const BoundaryData* g) const;
};

/// (n, k) immersed discretization of div(beta grad u) on a periodic grid.
/// Without geometry the operator is the plain periodic Laplacian.
class ImmersedOperator {
 public:
  ImmersedOperator(const Grid2D& grid, std::optional<LevelSetGeometry> geometry,
                   OperatorConfig config);

  const Grid2D& grid() const { return grid_; }
  const OperatorConfig& config() const { return config_; }
  const StencilSpec& spec() const { return spec_; }
  const std::vector<PointClass>& mask() const { return mask_; }
  const std::vector<ControlPoint>& control_points() const { return cps_; }
  const std::optional<LevelSetGeometry>& geometry() const { return geometry_; }
  Side side(std::size_t node) const { return sides_[node]; }
  double beta(std::size_t node) const;
  /// Largest coefficient in use; beta- only matters for jump problems.
  double beta_max() const {
    return config_.condition == Condition::Jump ? std::max(config_.beta_plus, config_.beta_minus)
                                                : config_.beta_plus;
  }
  /// Node indices of the unknowns (all non-exterior nodes), ascending.
  const std::vector<std::size_t>& unknowns() const { return unknowns_; }

  /// True when constants lie in the null space (Neumann or jump conditions).
  bool singular() const;

  /// out = L_Omega u (boundary data zero). Exterior entries are set to 0.
  void apply(std::span<const double> u, std::span<double> out) const;
  /// out = L_Omega u + L_Gamma g.
  void apply(std::span<const double> u, const BoundaryData& g, std::span<double> out) const;
  /// L_Gamma g alone.
  std::vector<double> boundary_term(const BoundaryData& g) const;

  /// CSR matrix of L_Omega over `unknowns()`. Throws TOO_LARGE when nx > 1024.
  linalg::SparseMatrix assemble() const;

  /// beta dn u at each control point for Dirichlet problems, u on the wall
  /// for Neumann problems, dn u+ for jump problems.
  std::vector<double> boundary_quantity(std::span<const double> u, const BoundaryData& g) const;

  /// Centered first derivatives along x and y with the same ghost treatment.
  std::array<std::vector<double>, 2> gradient(std::span<const double> u,
                                              const BoundaryData& g) const;

  /// Affine form of the wall value on `side` of control point `cp`.
  const AffineRow& wall_value(std::size_t cp, Side side) const;

  std::size_t affected_count() const { return affected_rows_.size(); }

 private:
  using Coeffs = std::span<const double>;

  void build_boundary();
  /// Adds scale * sum_t c_t u_ext(p + t e_axis) to `row`, with ghost values
  /// for footprint nodes across the surface.
  void add_axis_terms(std::size_t p, int axis, Coeffs c, double scale, AffineRow& row) const;
  void add_ghost(std::size_t cp, Side side, std::size_t s, double scale, AffineRow& row) const;
  static void compress(AffineRow& row);
  std::size_t slot(std::size_t cp, Side side) const {
    return 2 * cp + (side == Side::Plus ? 0 : 1);
  }
  std::size_t step(std::size_t idx, int axis, int steps) const;

  Grid2D grid_;
  std::optional<LevelSetGeometry> geometry_;
  OperatorConfig config_;
  StencilSpec spec_;
  std::vector<PointClass> mask_;
  std::vector<Side> sides_;
  std::vector<std::size_t> unknowns_;
  std::vector<ControlPoint> cps_;
  std::unordered_map<std::size_t, std::size_t> edge_to_cp_;  // 2 * lower + axis
  std::vector<std::optional<InterpolationSet>> sets_;        // per (cp, side)
  std::vector<std::optional<StencilSet>> stencils_;
  std::vector<AffineRow> walls_;
  std::vector<std::size_t> affected_nodes_;
  std::vector<AffineRow> affected_rows_;
};

/// Ritz values of dx^2 L / beta_max from an Arnoldi process with full
/// re-orthogonalisation. `breakdown` is set when the Krylov space became
/// invariant early; the returned values are still Ritz values.
struct SpectrumResult {
  std::vector<std::complex<double>> ritz;
  int dimension = 0;
  bool breakdown = false;

  double min_real() const;
  double max_real() const;
};

SpectrumResult extremal_spectrum(const ImmersedOperator& op, int krylov_dim = 200,
                                 unsigned seed = 20240607u);

}  // namespace iim

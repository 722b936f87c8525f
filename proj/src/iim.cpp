// SPDX-License-Identifier: Apache-2.0
#include "iim/iim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "iim/error.hpp"

namespace iim {

namespace {

// A half-disk of radius k dx. Flatter half-ellipses (normal axis 0.75 k)
// leave only k - 1 node rows along grid-aligned normals, and the resulting
// fits blow up the extrapolation weights.
constexpr double kInitialTangential = 1.0;
constexpr double kInitialNormal = 1.0;
constexpr double kGrowth = 1.3;
constexpr int kMaxGrowthSteps = kMaxInterpolationGrowth;

void monomials(Vec2 z, int k, std::span<double> out) {
  // ordering: degree by degree, x-power descending
  std::size_t c = 0;
  for (int d = 0; d < k; ++d)
    for (int a = d; a >= 0; --a) out[c++] = std::pow(z.x, a) * std::pow(z.y, d - a);
}

}  // namespace

StencilCounters& stencil_counters() {
  static StencilCounters counters;
  return counters;
}

InterpolationSet collect_interpolation_points(const ControlPoint& cp, const Grid2D& grid,
                                              const LevelSetGeometry& geometry, int k, Side side,
                                              int first_growth) {
  const std::size_t needed = 2 * monomial_count(k);
  Vec2 n = cp.normal;
  if (norm(n) == 0.0) n = geometry.normal(cp.position);
  const Vec2 t{-n.y, n.x};

  const int li = grid.i_of(cp.lower);
  const int lj = grid.j_of(cp.lower);
  Vec2 lower_offset{0.0, 0.0};
  lower_offset[cp.axis] = -cp.psi_lower;
  const std::size_t nearest = cp.psi_lower <= cp.psi_upper ? cp.lower : cp.upper;

  InterpolationSet set;
  set.center = cp.position;
  set.normal = n;
  set.side = side;
  set.order = k;
  const double start = std::pow(kGrowth, first_growth);
  set.semi_tangential = kInitialTangential * k * start;
  set.semi_normal = kInitialNormal * k * start;

  for (int attempt = first_growth; attempt <= kMaxGrowthSteps; ++attempt) {
    set.nodes.clear();
    set.offsets.clear();
    const double a = set.semi_tangential;
    const double b = set.semi_normal;
    // On a periodic grid a wider window would visit nodes twice.
    const int reach = std::min(static_cast<int>(std::ceil(a)) + 1, (std::min(grid.nx, grid.ny) - 1) / 2);
    for (int dj = -reach; dj <= reach; ++dj) {
      for (int di = -reach; di <= reach; ++di) {
        const Vec2 rel = lower_offset + Vec2{static_cast<double>(di), static_cast<double>(dj)};
        const double tt = dot(rel, t) / a;
        const double nn = dot(rel, n) / b;
        // The side test below cuts the ellipse down to its half on `side`.
        if (tt * tt + nn * nn > 1.0) continue;
        const auto node = grid.offset(li, lj, di, dj);
        if (!node || *node == nearest) continue;
        if (side_of(geometry.phi(grid.position(*node))) != side) continue;
        set.nodes.push_back(*node);
        set.offsets.push_back(rel);
      }
    }
    if (set.nodes.size() >= needed) return set;
    set.semi_tangential *= kGrowth;
    set.semi_normal *= kGrowth;
  }
  throw Error(ErrorCode::InsufficientPoints,
              "found " + std::to_string(set.nodes.size()) + " of " + std::to_string(needed) +
                  " interpolation points for order " + std::to_string(k));
}

double StencilRow::apply(double control_value, std::span<const double> node_values) const {
  assert(node_values.size() == at_nodes.size());
  double s = at_control * control_value;
  for (std::size_t i = 0; i < at_nodes.size(); ++i) s += at_nodes[i] * node_values[i];
  return s;
}

namespace {

linalg::DenseMatrix fit_matrix(const InterpolationSet& set) {
  const std::size_t m = monomial_count(set.order);
  linalg::DenseMatrix a(set.nodes.size() + 1, m);
  monomials({0.0, 0.0}, set.order, a.row(0));
  for (std::size_t r = 0; r < set.offsets.size(); ++r) monomials(set.offsets[r], set.order, a.row(r + 1));
  return a;
}

}  // namespace

PolynomialFit::PolynomialFit(InterpolationSet set)
    : set_(std::move(set)), qr_(fit_matrix(set_), 1e-10) {
  ++stencil_counters().factorizations;
  if (qr_.rank() < monomial_count(set_.order))
    throw Error(ErrorCode::RankDeficient, "interpolation system has rank " + std::to_string(qr_.rank()) +
                                              " < " + std::to_string(monomial_count(set_.order)));
}

StencilRow PolynomialFit::from_monomial_values(std::span<const double> v) const {
  ++stencil_counters().stencils;
  const auto w = qr_.pinv_transpose_apply(v);
  StencilRow row;
  row.at_control = w[0];
  row.at_nodes.assign(w.begin() + 1, w.end());
  return row;
}

StencilRow PolynomialFit::evaluate(Vec2 offset) const {
  std::vector<double> v(monomial_count(set_.order));
  monomials(offset, set_.order, v);
  return from_monomial_values(v);
}

StencilRow PolynomialFit::normal_derivative(double dx, double beta) const {
  std::vector<double> v(monomial_count(set_.order), 0.0);
  // d/dn at the origin only sees the linear monomials x (index 1) and y (index 2).
  if (set_.order >= 2) {
    v[1] = beta * set_.normal.x / dx;
    v[2] = beta * set_.normal.y / dx;
  }
  return from_monomial_values(v);
}

StencilSet build_stencils(const InterpolationSet& set, Condition kind,
                          std::span<const GhostRequest> ghosts, double dx, double beta,
                          bool with_normal) {
  PolynomialFit fit(set);
  StencilSet out;
  out.kind = kind;
  out.nodes = set.nodes;
  out.ghosts.reserve(ghosts.size());
  for (const auto& g : ghosts) out.ghosts.push_back({g.node, fit.evaluate(g.offset)});
  if (with_normal) out.normal = fit.normal_derivative(dx, beta);
  return out;
}

double neumann_wall_value(const StencilSet& set, double q_bar, std::span<const double> u_samples) {
  const auto& s = set.normal;
  double smax = 0.0;
  for (double c : s.at_nodes) smax = std::max(smax, std::abs(c));
  if (std::abs(s.at_control) < 1e-14 * smax || s.at_control == 0.0)
    throw Error(ErrorCode::SingularWallStencil, "normal stencil has vanishing wall weight");
  double acc = 0.0;
  for (std::size_t i = 0; i < s.at_nodes.size(); ++i) acc += s.at_nodes[i] * u_samples[i];
  return (q_bar - acc) / s.at_control;
}

std::pair<double, double> interface_wall_values(const StencilSet& plus, const StencilSet& minus,
                                                double beta_plus, double beta_minus, double j0,
                                                double j1, std::span<const double> u_plus,
                                                std::span<const double> u_minus) {
  const double denom = beta_plus * plus.normal.at_control - beta_minus * minus.normal.at_control;
  const double scale = std::abs(beta_plus * plus.normal.at_control) +
                       std::abs(beta_minus * minus.normal.at_control);
  if (denom == 0.0 || std::abs(denom) < 1e-14 * scale)
    throw Error(ErrorCode::SingularInterfaceSystem, "beta+ s_c+ - beta- s_c- vanishes");
  double sp = 0.0, sm = 0.0;
  for (std::size_t i = 0; i < plus.normal.at_nodes.size(); ++i) sp += plus.normal.at_nodes[i] * u_plus[i];
  for (std::size_t i = 0; i < minus.normal.at_nodes.size(); ++i) sm += minus.normal.at_nodes[i] * u_minus[i];
  const double ubar = -(beta_plus * sp - beta_minus * sm) / denom;
  const double up = ubar + (j1 - beta_minus * minus.normal.at_control * j0) / denom;
  const double um = ubar + (j1 - beta_plus * plus.normal.at_control * j0) / denom;
  return {up, um};
}

}  // namespace iim

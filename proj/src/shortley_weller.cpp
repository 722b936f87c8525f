// SPDX-License-Identifier: Apache-2.0
#include "iim/shortley_weller.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "iim/error.hpp"

namespace iim {

std::vector<ControlPoint> shift_intersections(std::vector<ControlPoint> points) {
  for (auto& cp : points) {
    if (cp.kind == Condition::Jump) {
      cp.shifted = std::make_pair(0.5, 0.5);
      continue;
    }
    // Only the plus node is in the domain; the exterior side takes the rest.
    double in_domain = cp.psi_on(Side::Plus);
    in_domain = std::max(in_domain, 0.5);
    const double lower = cp.lower_side == Side::Plus ? in_domain : 1.0 - in_domain;
    cp.shifted = std::make_pair(lower, 1.0 - lower);
  }
  return points;
}

std::array<double, 3> sw_dirichlet_coeffs(double psi_minus, double psi_plus) {
  const double s = psi_minus + psi_plus;
  return {2.0 / (psi_minus * s), -2.0 / (psi_minus * psi_plus), 2.0 / (psi_plus * s)};
}

SWNeumannCoeffs sw_neumann_coeffs(NeumannCase which, double psi_minus, double psi_plus) {
  SWNeumannCoeffs c;
  switch (which) {
    case NeumannCase::A: {
      const double d = 2.0 * psi_minus + psi_plus;
      c.flux_minus = -2.0 / d;
      c.u_centre = -2.0 / (psi_plus * d);
      c.u_right = 2.0 / (psi_plus * d);
      break;
    }
    case NeumannCase::B: {
      const double d = psi_minus + 2.0 * psi_plus;
      c.u_left = 2.0 / (psi_minus * d);
      c.u_centre = -2.0 / (psi_minus * d);
      c.flux_plus = 2.0 / d;
      break;
    }
    case NeumannCase::C:
      c.flux_minus = -1.0 / (psi_minus + psi_plus);
      c.flux_plus = 1.0 / (psi_minus + psi_plus);
      break;
  }
  return c;
}

std::pair<double, double> sw_interface_wall_values(double psi_minus, double psi_plus,
                                                   double beta_minus, double beta_plus, double j0,
                                                   double j1, double u_minus, double u_plus,
                                                   double dx) {
  const double ap = psi_plus / beta_plus;
  const double am = psi_minus / beta_minus;
  const double s = ap + am;
  const double mean = (ap * u_minus + am * u_plus) / s - dx * ap * am * j1 / s;
  return {mean + ap * j0 / s, mean - am * j0 / s};
}

SWOperator::SWOperator(const Grid2D& grid, std::optional<LevelSetGeometry> geometry, SWConfig config)
    : grid_(grid), geometry_(std::move(geometry)), config_(config) {
  if (!grid_.periodic_x || !grid_.periodic_y)
    throw Error(ErrorCode::InvalidArgument, "the Shortley-Weller operator needs a periodic grid");
  build();
}

bool SWOperator::singular() const { return !geometry_ || config_.condition != Condition::Dirichlet; }

void SWOperator::add_wall_value(std::size_t node, const Wall& w, double scale, AffineRow& row) const {
  const ControlPoint& cp = cps_[w.cp];
  if (config_.condition != Condition::Jump) {
    row.data.push_back({w.cp, scale, 0.0});
    return;
  }
  const auto [pl, pu] = *cp.shifted;
  const double psi_plus = cp.lower_side == Side::Plus ? pl : pu;
  const double psi_minus = cp.lower_side == Side::Minus ? pl : pu;
  const double ap = psi_plus / config_.beta_plus;
  const double am = psi_minus / config_.beta_minus;
  const double s = ap + am;
  row.nodes.emplace_back(cp.node_on(Side::Minus), scale * ap / s);
  row.nodes.emplace_back(cp.node_on(Side::Plus), scale * am / s);
  const double on_j0 = sides_[node] == Side::Plus ? ap / s : -am / s;
  row.data.push_back({w.cp, scale * on_j0, -scale * grid_.dx * ap * am / s});
}

void SWOperator::build() {
  const bool two_sided = config_.condition == Condition::Jump;
  mask_ = classify_points(grid_, geometry_ ? &*geometry_ : nullptr, 1, two_sided);
  sides_.assign(grid_.size(), Side::Plus);
  if (geometry_) {
    for (std::size_t i = 0; i < grid_.size(); ++i) sides_[i] = side_of(geometry_->phi(grid_.position(i)));
    cps_ = find_control_points(grid_, *geometry_, config_.condition);
    if (config_.shift) {
      cps_ = shift_intersections(std::move(cps_));
    } else {
      for (auto& cp : cps_) cp.shifted = std::make_pair(cp.psi_lower, cp.psi_upper);
    }
  }
  std::unordered_map<std::size_t, std::size_t> edge_to_cp;
  for (std::size_t c = 0; c < cps_.size(); ++c)
    edge_to_cp[2 * cps_[c].lower + static_cast<std::size_t>(cps_[c].axis)] = c;

  unknown_of_.assign(grid_.size(), -1);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (mask_[i] == PointClass::Exterior) continue;
    unknown_of_[i] = static_cast<std::ptrdiff_t>(unknowns_.size());
    unknowns_.push_back(i);
  }

  const double inv = 1.0 / (grid_.dx * grid_.dx);
  const bool neumann = config_.condition == Condition::Neumann;
  rows_.assign(unknowns_.size(), AffineRow{});
  for (std::size_t r = 0; r < unknowns_.size(); ++r) {
    const std::size_t p = unknowns_[r];
    AffineRow& row = rows_[r];
    int both_walls = 0;
    AffineRow isolated;
    for (int axis = 0; axis < 2; ++axis) {
      const std::size_t left = *grid_.offset(p, axis, -1);
      const std::size_t right = *grid_.offset(p, axis, 1);
      std::optional<Wall> wl, wr;
      if (sides_[left] != sides_[p]) {
        const std::size_t c = edge_to_cp.at(2 * left + static_cast<std::size_t>(axis));
        wl = Wall{c, cps_[c].shifted->second};
      }
      if (sides_[right] != sides_[p]) {
        const std::size_t c = edge_to_cp.at(2 * p + static_cast<std::size_t>(axis));
        wr = Wall{c, cps_[c].shifted->first};
      }
      const double pm = wl ? wl->psi : 1.0;
      const double pp = wr ? wr->psi : 1.0;

      if (!neumann || (!wl && !wr)) {
        const auto c = sw_dirichlet_coeffs(pm, pp);
        row.nodes.emplace_back(p, inv * c[1]);
        if (wl)
          add_wall_value(p, *wl, inv * c[0], row);
        else
          row.nodes.emplace_back(left, inv * c[0]);
        if (wr)
          add_wall_value(p, *wr, inv * c[2], row);
        else
          row.nodes.emplace_back(right, inv * c[2]);
        continue;
      }

      // Neumann data is beta dn u; the wall derivative along the axis is
      // sign(n_axis) q / beta.
      auto flux_factor = [&](const Wall& w) {
        const double n = cps_[w.cp].normal[axis];
        return (n >= 0.0 ? 1.0 : -1.0) * grid_.dx / config_.beta_plus;
      };
      const NeumannCase which = wl && wr ? NeumannCase::C : (wl ? NeumannCase::A : NeumannCase::B);
      const auto c = sw_neumann_coeffs(which, pm, pp);
      if (c.u_centre != 0.0) row.nodes.emplace_back(p, inv * c.u_centre);
      if (c.u_left != 0.0) row.nodes.emplace_back(left, inv * c.u_left);
      if (c.u_right != 0.0) row.nodes.emplace_back(right, inv * c.u_right);
      if (wl) row.data.push_back({wl->cp, 0.0, inv * c.flux_minus * flux_factor(*wl)});
      if (wr) row.data.push_back({wr->cp, 0.0, inv * c.flux_plus * flux_factor(*wr)});
      if (which == NeumannCase::C) ++both_walls;
      isolated.nodes.emplace_back(p, inv * sw_dirichlet_coeffs(pm, pp)[1]);
    }
    if (both_walls == 2) {
      // Walls on all four sides: pin with the homogeneous Dirichlet stencil.
      row = std::move(isolated);
      ++isolated_;
    }
  }

  matrix_ = linalg::SparseMatrix{};
  matrix_.rows = matrix_.cols = unknowns_.size();
  std::vector<std::pair<std::size_t, double>> entries;
  for (auto& row : rows_) {
    entries.clear();
    for (const auto& [node, v] : row.nodes) {
      if (unknown_of_[node] < 0) throw Error(ErrorCode::InvalidArgument, "SW stencil reaches an exterior node");
      entries.emplace_back(static_cast<std::size_t>(unknown_of_[node]), v);
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t e = 0; e < entries.size(); ++e) {
      if (e > 0 && entries[e].first == matrix_.col_index.back()) {
        matrix_.values.back() += entries[e].second;
        continue;
      }
      matrix_.col_index.push_back(entries[e].first);
      matrix_.values.push_back(entries[e].second);
    }
    matrix_.row_ptr.push_back(matrix_.col_index.size());
  }
}

void SWOperator::apply(std::span<const double> u, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r = 0; r < unknowns_.size(); ++r) out[unknowns_[r]] = rows_[r].evaluate(u, nullptr);
}

void SWOperator::apply(std::span<const double> u, const BoundaryData& g, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r = 0; r < unknowns_.size(); ++r) out[unknowns_[r]] = rows_[r].evaluate(u, &g);
}

std::vector<double> SWOperator::boundary_term(const BoundaryData& g) const {
  std::vector<double> zero(grid_.size(), 0.0), out(grid_.size(), 0.0);
  apply(zero, g, out);
  return out;
}

}  // namespace iim

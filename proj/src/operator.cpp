// SPDX-License-Identifier: Apache-2.0
#include "iim/operator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "iim/error.hpp"

namespace iim {

StencilSpec interior_stencil(int order) {
  StencilSpec s;
  s.order = order;
  switch (order) {
    case 2:
      s.second = {1.0, -2.0, 1.0};
      s.first = {-0.5, 0.0, 0.5};
      break;
    case 4:
      s.second = {-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0};
      s.first = {1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0};
      break;
    case 6:
      s.second = {1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0};
      s.first = {-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
      break;
    default:
      throw Error(ErrorCode::UnsupportedOrder, "interior order " + std::to_string(order));
  }
  s.half_width = order / 2;
  return s;
}

double symbol_sigma(const StencilSpec& spec, double ktheta) {
  double s = 0.0;
  for (int j = 1; j <= spec.half_width; ++j) s += spec.a(j) * (1.0 - std::cos(j * ktheta));
  return 2.0 * s;
}

double symbol_sigma_max(const StencilSpec& spec, int samples) {
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double k = std::numbers::pi * i / (samples - 1);
    best = std::max(best, symbol_sigma(spec, k));
  }
  return best;
}

double AffineRow::evaluate(std::span<const double> u, const BoundaryData* g) const {
  double s = 0.0;
  for (const auto& [node, w] : nodes) s += w * u[node];
  if (g)
    for (const auto& d : data) s += d.on_value * (*g)[d.cp].value + d.on_flux * (*g)[d.cp].flux;
  return s;
}

ImmersedOperator::ImmersedOperator(const Grid2D& grid, std::optional<LevelSetGeometry> geometry,
                                   OperatorConfig config)
    : grid_(grid), geometry_(std::move(geometry)), config_(config), spec_(interior_stencil(config.order)) {
  if (!grid_.periodic_x || !grid_.periodic_y)
    throw Error(ErrorCode::InvalidArgument, "the immersed operator needs a periodic grid");
  const bool two_sided = config_.condition == Condition::Jump;
  mask_ = classify_points(grid_, geometry_ ? &*geometry_ : nullptr, spec_.half_width, two_sided);
  sides_.assign(grid_.size(), Side::Plus);
  if (geometry_)
    for (std::size_t i = 0; i < grid_.size(); ++i) sides_[i] = side_of(geometry_->phi(grid_.position(i)));
  for (std::size_t i = 0; i < grid_.size(); ++i)
    if (mask_[i] != PointClass::Exterior) unknowns_.push_back(i);
  if (geometry_) build_boundary();
}

double ImmersedOperator::beta(std::size_t node) const {
  return sides_[node] == Side::Plus ? config_.beta_plus : config_.beta_minus;
}

bool ImmersedOperator::singular() const {
  return !geometry_ || config_.condition != Condition::Dirichlet;
}

std::size_t ImmersedOperator::step(std::size_t idx, int axis, int steps) const {
  return *grid_.offset(idx, axis, steps);
}

const AffineRow& ImmersedOperator::wall_value(std::size_t cp, Side side) const {
  return walls_[slot(cp, side)];
}

void ImmersedOperator::build_boundary() {
  const auto& geom = *geometry_;
  const int w = spec_.half_width;
  const int k = config_.boundary_order;
  const double dx = grid_.dx;
  const Condition cond = config_.condition;

  cps_ = find_control_points(grid_, geom, cond);
  for (std::size_t c = 0; c < cps_.size(); ++c)
    edge_to_cp_[2 * cps_[c].lower + static_cast<std::size_t>(cps_[c].axis)] = c;

  sets_.assign(2 * cps_.size(), std::nullopt);
  stencils_.assign(2 * cps_.size(), std::nullopt);
  walls_.assign(2 * cps_.size(), AffineRow{});

  const std::vector<Side> sides_needed =
      cond == Condition::Jump ? std::vector<Side>{Side::Plus, Side::Minus} : std::vector<Side>{Side::Plus};
  const double normal_beta = cond == Condition::Neumann ? config_.beta_plus : 1.0;

  for (std::size_t c = 0; c < cps_.size(); ++c) {
    const ControlPoint& cp = cps_[c];
    for (Side s : sides_needed) {
      std::vector<GhostRequest> ghosts;
      for (int g = 0; g < w; ++g) {
        GhostRequest r;
        if (s == cp.lower_side) {
          r.node = step(cp.upper, cp.axis, g);
          r.offset[cp.axis] = cp.psi_upper + g;
        } else {
          r.node = step(cp.lower, cp.axis, -g);
          r.offset[cp.axis] = -(cp.psi_lower + g);
        }
        ghosts.push_back(r);
      }
      // Nodes on too few grid lines make the fit rank deficient; a larger
      // region fixes that.
      for (int growth = 0;; ++growth) {
        auto set = collect_interpolation_points(cp, grid_, geom, k, s, growth);
        try {
          stencils_[slot(c, s)] =
              build_stencils(set, cond, ghosts, dx, normal_beta, cond != Condition::Dirichlet);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::RankDeficient || growth >= kMaxInterpolationGrowth) throw;
          continue;
        }
        sets_[slot(c, s)] = std::move(set);
        break;
      }
    }

    if (cond == Condition::Dirichlet) {
      walls_[slot(c, Side::Plus)].data.push_back({c, 1.0, 0.0});
    } else if (cond == Condition::Neumann) {
      const auto& st = *stencils_[slot(c, Side::Plus)];
      double smax = 0.0;
      for (double v : st.normal.at_nodes) smax = std::max(smax, std::abs(v));
      const double sc = st.normal.at_control;
      if (sc == 0.0 || std::abs(sc) < 1e-14 * smax)
        throw Error(ErrorCode::SingularWallStencil, "control point " + std::to_string(c));
      AffineRow& row = walls_[slot(c, Side::Plus)];
      for (std::size_t i = 0; i < st.nodes.size(); ++i)
        row.nodes.emplace_back(st.nodes[i], -st.normal.at_nodes[i] / sc);
      row.data.push_back({c, 0.0, 1.0 / sc});
      compress(row);
    } else {
      const auto& sp = *stencils_[slot(c, Side::Plus)];
      const auto& sm = *stencils_[slot(c, Side::Minus)];
      const double bp = config_.beta_plus, bm = config_.beta_minus;
      const double denom = bp * sp.normal.at_control - bm * sm.normal.at_control;
      const double scale = std::abs(bp * sp.normal.at_control) + std::abs(bm * sm.normal.at_control);
      if (denom == 0.0 || std::abs(denom) < 1e-14 * scale)
        throw Error(ErrorCode::SingularInterfaceSystem, "control point " + std::to_string(c));
      AffineRow mean;
      for (std::size_t i = 0; i < sp.nodes.size(); ++i)
        mean.nodes.emplace_back(sp.nodes[i], -bp * sp.normal.at_nodes[i] / denom);
      for (std::size_t i = 0; i < sm.nodes.size(); ++i)
        mean.nodes.emplace_back(sm.nodes[i], bm * sm.normal.at_nodes[i] / denom);
      compress(mean);
      AffineRow plus = mean, minus = mean;
      plus.data.push_back({c, -bm * sm.normal.at_control / denom, 1.0 / denom});
      minus.data.push_back({c, -bp * sp.normal.at_control / denom, 1.0 / denom});
      walls_[slot(c, Side::Plus)] = std::move(plus);
      walls_[slot(c, Side::Minus)] = std::move(minus);
    }
  }

  for (std::size_t p = 0; p < grid_.size(); ++p) {
    if (mask_[p] != PointClass::Affected) continue;
    AffineRow row;
    const double scale = beta(p) / (dx * dx);
    for (int axis = 0; axis < 2; ++axis) add_axis_terms(p, axis, spec_.second, scale, row);
    compress(row);
    affected_nodes_.push_back(p);
    affected_rows_.push_back(std::move(row));
  }
}

void ImmersedOperator::add_ghost(std::size_t cp, Side side, std::size_t s, double scale,
                                 AffineRow& row) const {
  const auto& st = stencils_[slot(cp, side)];
  if (!st || s >= st->ghosts.size())
    throw Error(ErrorCode::InvalidArgument, "missing ghost stencil at control point " + std::to_string(cp));
  const StencilRow& g = st->ghosts[s].row;
  for (std::size_t i = 0; i < st->nodes.size(); ++i) row.nodes.emplace_back(st->nodes[i], scale * g.at_nodes[i]);
  const AffineRow& wall = walls_[slot(cp, side)];
  const double f = scale * g.at_control;
  for (const auto& [node, w] : wall.nodes) row.nodes.emplace_back(node, f * w);
  for (const auto& d : wall.data) row.data.push_back({d.cp, f * d.on_value, f * d.on_flux});
}

void ImmersedOperator::add_axis_terms(std::size_t p, int axis, Coeffs c, double scale,
                                      AffineRow& row) const {
  const int w = static_cast<int>(c.size() / 2);
  const Side here = sides_[p];
  for (int t = -w; t <= w; ++t) {
    const double ct = c[static_cast<std::size_t>(t + w)];
    if (ct == 0.0) continue;
    if (t == 0) {
      row.nodes.emplace_back(p, scale * ct);
      continue;
    }
    const int dir = t > 0 ? 1 : -1;
    bool crossed = false;
    for (int m = 1; m <= std::abs(t); ++m) {
      const std::size_t node = step(p, axis, dir * m);
      if (sides_[node] == here) continue;
      const std::size_t lower = dir > 0 ? step(p, axis, m - 1) : node;
      const auto it = edge_to_cp_.find(2 * lower + static_cast<std::size_t>(axis));
      if (it == edge_to_cp_.end())
        throw Error(ErrorCode::InvalidArgument, "no control point on a crossed edge");
      add_ghost(it->second, here, static_cast<std::size_t>(std::abs(t) - m), scale * ct, row);
      crossed = true;
      break;
    }
    if (!crossed) row.nodes.emplace_back(step(p, axis, t), scale * ct);
  }
}

void ImmersedOperator::compress(AffineRow& row) {
  std::sort(row.nodes.begin(), row.nodes.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<std::size_t, double>> nodes;
  for (const auto& e : row.nodes) {
    if (!nodes.empty() && nodes.back().first == e.first)
      nodes.back().second += e.second;
    else
      nodes.push_back(e);
  }
  row.nodes = std::move(nodes);
  std::sort(row.data.begin(), row.data.end(), [](const auto& a, const auto& b) { return a.cp < b.cp; });
  std::vector<AffineRow::DataTerm> data;
  for (const auto& d : row.data) {
    if (!data.empty() && data.back().cp == d.cp) {
      data.back().on_value += d.on_value;
      data.back().on_flux += d.on_flux;
    } else {
      data.push_back(d);
    }
  }
  row.data = std::move(data);
}

void ImmersedOperator::apply(std::span<const double> u, std::span<double> out) const {
  const int nx = grid_.nx, ny = grid_.ny;
  const int w = spec_.half_width;
  const double inv = 1.0 / (grid_.dx * grid_.dx);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t p = grid_.index(i, j);
      if (mask_[p] != PointClass::Interior) {
        out[p] = 0.0;
        continue;
      }
      double s = 2.0 * spec_.a(0) * u[p];
      for (int t = 1; t <= w; ++t) {
        const int ip = (i + t) % nx, im = (i - t + nx) % nx;
        const int jp = (j + t) % ny, jm = (j - t + ny) % ny;
        s += spec_.a(t) * (u[grid_.index(ip, j)] + u[grid_.index(im, j)] + u[grid_.index(i, jp)] +
                           u[grid_.index(i, jm)]);
      }
      out[p] = beta(p) * inv * s;
    }
  }
  for (std::size_t r = 0; r < affected_nodes_.size(); ++r)
    out[affected_nodes_[r]] = affected_rows_[r].evaluate(u, nullptr);
}

void ImmersedOperator::apply(std::span<const double> u, const BoundaryData& g, std::span<double> out) const {
  apply(u, out);
  for (std::size_t r = 0; r < affected_nodes_.size(); ++r) {
    double s = 0.0;
    for (const auto& d : affected_rows_[r].data) s += d.on_value * g[d.cp].value + d.on_flux * g[d.cp].flux;
    out[affected_nodes_[r]] += s;
  }
}

std::vector<double> ImmersedOperator::boundary_term(const BoundaryData& g) const {
  std::vector<double> zero(grid_.size(), 0.0), out(grid_.size(), 0.0);
  apply(zero, g, out);
  return out;
}

linalg::SparseMatrix ImmersedOperator::assemble() const {
  if (grid_.nx > 1024 || grid_.ny > 1024)
    throw Error(ErrorCode::TooLarge, "assembly is limited to nx <= 1024");
  std::vector<std::ptrdiff_t> col(grid_.size(), -1);
  for (std::size_t r = 0; r < unknowns_.size(); ++r) col[unknowns_[r]] = static_cast<std::ptrdiff_t>(r);
  std::vector<std::ptrdiff_t> affected_row(grid_.size(), -1);
  for (std::size_t r = 0; r < affected_nodes_.size(); ++r)
    affected_row[affected_nodes_[r]] = static_cast<std::ptrdiff_t>(r);

  linalg::SparseMatrix a;
  a.rows = a.cols = unknowns_.size();
  const int w = spec_.half_width;
  const double inv = 1.0 / (grid_.dx * grid_.dx);
  std::vector<std::pair<std::size_t, double>> entries;
  for (std::size_t p : unknowns_) {
    entries.clear();
    if (affected_row[p] >= 0) {
      for (const auto& [node, v] : affected_rows_[static_cast<std::size_t>(affected_row[p])].nodes) {
        if (col[node] < 0) throw Error(ErrorCode::InvalidArgument, "stencil reaches an exterior node");
        entries.emplace_back(static_cast<std::size_t>(col[node]), v);
      }
    } else {
      const double b = beta(p) * inv;
      entries.emplace_back(static_cast<std::size_t>(col[p]), 2.0 * spec_.a(0) * b);
      for (int axis = 0; axis < 2; ++axis)
        for (int t = 1; t <= w; ++t)
          for (int sgn : {-1, 1})
            entries.emplace_back(static_cast<std::size_t>(col[step(p, axis, sgn * t)]), spec_.a(t) * b);
    }
    std::sort(entries.begin(), entries.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (std::size_t e = 0; e < entries.size(); ++e) {
      if (e > 0 && entries[e].first == a.col_index.back()) {
        a.values.back() += entries[e].second;
        continue;
      }
      a.col_index.push_back(entries[e].first);
      a.values.push_back(entries[e].second);
    }
    a.row_ptr.push_back(a.col_index.size());
  }
  return a;
}

std::vector<double> ImmersedOperator::boundary_quantity(std::span<const double> u,
                                                        const BoundaryData& g) const {
  std::vector<double> out(cps_.size(), 0.0);
  for (std::size_t c = 0; c < cps_.size(); ++c) {
    switch (config_.condition) {
      case Condition::Dirichlet: {
        PolynomialFit fit(*sets_[slot(c, Side::Plus)]);
        const StencilRow s = fit.normal_derivative(grid_.dx, config_.beta_plus);
        double v = s.at_control * g[c].value;
        const auto& nodes = sets_[slot(c, Side::Plus)]->nodes;
        for (std::size_t i = 0; i < nodes.size(); ++i) v += s.at_nodes[i] * u[nodes[i]];
        out[c] = v;
        break;
      }
      case Condition::Neumann:
        out[c] = walls_[slot(c, Side::Plus)].evaluate(u, &g);
        break;
      case Condition::Jump: {
        const auto& st = *stencils_[slot(c, Side::Plus)];
        double v = st.normal.at_control * walls_[slot(c, Side::Plus)].evaluate(u, &g);
        for (std::size_t i = 0; i < st.nodes.size(); ++i) v += st.normal.at_nodes[i] * u[st.nodes[i]];
        out[c] = v;
        break;
      }
    }
  }
  return out;
}

std::array<std::vector<double>, 2> ImmersedOperator::gradient(std::span<const double> u,
                                                              const BoundaryData& g) const {
  std::array<std::vector<double>, 2> out{std::vector<double>(grid_.size(), 0.0),
                                         std::vector<double>(grid_.size(), 0.0)};
  const double inv = 1.0 / grid_.dx;
  const int w = spec_.half_width;
  for (std::size_t p = 0; p < grid_.size(); ++p) {
    if (mask_[p] == PointClass::Exterior) continue;
    for (int axis = 0; axis < 2; ++axis) {
      if (mask_[p] == PointClass::Interior) {
        double s = 0.0;
        for (int t = 1; t <= w; ++t) s += spec_.d(t) * (u[step(p, axis, t)] - u[step(p, axis, -t)]);
        out[axis][p] = inv * s;
      } else {
        AffineRow row;
        add_axis_terms(p, axis, spec_.first, inv, row);
        out[axis][p] = row.evaluate(u, &g);
      }
    }
  }
  return out;
}

double SpectrumResult::min_real() const {
  double m = 0.0;
  bool first = true;
  for (const auto& z : ritz) {
    if (first || z.real() < m) m = z.real();
    first = false;
  }
  return m;
}

double SpectrumResult::max_real() const {
  double m = 0.0;
  bool first = true;
  for (const auto& z : ritz) {
    if (first || z.real() > m) m = z.real();
    first = false;
  }
  return m;
}

SpectrumResult extremal_spectrum(const ImmersedOperator& op, int krylov_dim, unsigned seed) {
  const auto& unknowns = op.unknowns();
  const std::size_t n = unknowns.size();
  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(std::max(krylov_dim, 1)), n);
  const double scale = op.grid().dx * op.grid().dx / op.beta_max();

  std::vector<double> full_in(op.grid().size(), 0.0), full_out(op.grid().size(), 0.0);
  auto matvec = [&](std::span<const double> x, std::span<double> y) {
    for (std::size_t r = 0; r < n; ++r) full_in[unknowns[r]] = x[r];
    op.apply(full_in, full_out);
    for (std::size_t r = 0; r < n; ++r) y[r] = scale * full_out[unknowns[r]];
  };

  std::vector<std::vector<double>> v;
  v.reserve(m + 1);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto random_unit = [&]() {
    std::vector<double> x(n);
    for (auto& e : x) e = normal(rng);
    for (const auto& b : v) linalg::axpy(-linalg::dot(b, x), b, x);
    const double len = linalg::norm2(x);
    for (auto& e : x) e /= len;
    return x;
  };
  // Singular operators map constants to zero exactly. Seeding the basis with
  // the constant vector pins that eigenvalue at 0 instead of leaving a
  // slowly converging Ritz value next to it.
  const bool pin_constants = op.singular() && n > 1;
  if (pin_constants)
    v.emplace_back(n, 1.0 / std::sqrt(static_cast<double>(n)));
  else
    v.push_back(random_unit());

  linalg::DenseMatrix h(m + 1, m);
  SpectrumResult result;
  std::size_t dim = m;
  std::vector<double> w(n);
  for (std::size_t j = 0; j < m; ++j) {
    matvec(v[j], w);
    const double wnorm0 = linalg::norm2(w);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i <= j; ++i) {
        const double c = linalg::dot(v[i], w);
        h(i, j) += c;
        linalg::axpy(-c, v[i], w);
      }
    }
    if (pin_constants && j == 0) {
      // The residual of L 1 is round-off; restart from a fresh direction.
      if (m > 1) v.push_back(random_unit());
      continue;
    }
    const double hn = linalg::norm2(w);
    h(j + 1, j) = hn;
    if (hn <= 1e-12 * std::max(wnorm0, 1.0)) {
      dim = j + 1;
      result.breakdown = j + 1 < m;
      break;
    }
    if (j + 1 < m) {
      for (auto& x : w) x /= hn;
      v.push_back(w);
    }
  }
  linalg::DenseMatrix hm(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) hm(i, j) = h(i, j);
  result.ritz = linalg::hessenberg_eigs(hm);
  result.dimension = static_cast<int>(dim);
  return result;
}

}  // namespace iim

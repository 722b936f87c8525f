// SPDX-License-Identifier: Apache-2.0
#include "iim/multigrid.hpp"

#include <algorithm>
#include <cmath>

#include "iim/error.hpp"

namespace iim {

MGLevel::MGLevel(SWOperator op_in) : op(std::move(op_in)) {
  const auto& a = op.matrix();
  const auto& unknowns = op.unknowns();
  row_ptr = a.row_ptr;
  cols.resize(a.col_index.size());
  for (std::size_t e = 0; e < a.col_index.size(); ++e) cols[e] = unknowns[a.col_index[e]];
  values = a.values;
  diagonal.assign(unknowns.size(), 0.0);
  const Grid2D& g = op.grid();
  for (std::size_t r = 0; r < unknowns.size(); ++r) {
    for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e)
      if (cols[e] == unknowns[r]) diagonal[r] += values[e];
    ((g.i_of(unknowns[r]) + g.j_of(unknowns[r])) % 2 == 0 ? red : black).push_back(r);
  }
}

void MGLevel::residual(std::span<const double> u, std::span<const double> f, std::span<double> r) const {
  std::fill(r.begin(), r.end(), 0.0);
  const auto& unknowns = op.unknowns();
  for (std::size_t row = 0; row < unknowns.size(); ++row) {
    double s = 0.0;
    for (std::size_t e = row_ptr[row]; e < row_ptr[row + 1]; ++e) s += values[e] * u[cols[e]];
    r[unknowns[row]] = f[unknowns[row]] - s;
  }
}

void smooth_rbgs(const MGLevel& level, std::span<double> u, std::span<const double> f, int sweeps) {
  const auto& unknowns = level.op.unknowns();
  for (std::size_t r = 0; r < unknowns.size(); ++r)
    if (level.diagonal[r] == 0.0)
      throw Error(ErrorCode::ZeroDiagonal, "node " + std::to_string(unknowns[r]));
  for (int s = 0; s < sweeps; ++s) {
    for (const auto* color : {&level.red, &level.black}) {
      for (std::size_t r : *color) {
        const std::size_t p = unknowns[r];
        double acc = f[p];
        for (std::size_t e = level.row_ptr[r]; e < level.row_ptr[r + 1]; ++e)
          if (level.cols[e] != p) acc -= level.values[e] * u[level.cols[e]];
        u[p] = acc / level.diagonal[r];
      }
    }
  }
}

std::vector<double> restrict_halfweight(const Grid2D& fine, std::span<const double> r) {
  const int n = fine.nx / 2;
  const Grid2D coarse = Grid2D::unit_square(n);
  std::vector<double> out(coarse.size(), 0.0);
  const int nf = fine.nx;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int fi = 2 * i, fj = 2 * j;
      const double edges = r[fine.index((fi + 1) % nf, fj)] + r[fine.index((fi - 1 + nf) % nf, fj)] +
                           r[fine.index(fi, (fj + 1) % nf)] + r[fine.index(fi, (fj - 1 + nf) % nf)];
      out[coarse.index(i, j)] = 0.5 * r[fine.index(fi, fj)] + 0.125 * edges;
    }
  }
  return out;
}

std::vector<double> prolong(const Grid2D& coarse, std::span<const double> e,
                            std::span<const PointClass> coarse_mask,
                            std::span<const PointClass> fine_mask, ProlongationKind kind) {
  const int n = coarse.nx;
  const int nf = 2 * n;
  const Grid2D fine = Grid2D::unit_square(nf);
  std::vector<double> out(fine.size(), 0.0);
  for (int j = 0; j < nf; ++j) {
    for (int i = 0; i < nf; ++i) {
      const std::size_t p = fine.index(i, j);
      if (fine_mask[p] == PointClass::Exterior) continue;
      const int ci = i / 2, cj = j / 2;
      const int di = i % 2, dj = j % 2;
      double sum = 0.0;
      int count = 0, total = 0;
      for (int a = 0; a <= di; ++a) {
        for (int b = 0; b <= dj; ++b) {
          const std::size_t c = coarse.index((ci + a) % n, (cj + b) % n);
          ++total;
          if (coarse_mask[c] == PointClass::Exterior) continue;
          sum += e[c];
          ++count;
        }
      }
      if (kind == ProlongationKind::Bilinear)
        out[p] = sum / total;
      else
        out[p] = count > 0 ? sum / count : 0.0;
    }
  }
  return out;
}

CoarseSolver::CoarseSolver(const MGLevel& level) : level_(&level) {
  const auto& a = level.op.matrix();
  const std::size_t n = a.rows;
  bordered_ = level.op.singular();
  const std::size_t m = bordered_ ? n + 1 : n;
  linalg::DenseMatrix dense(m, m);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t e = a.row_ptr[r]; e < a.row_ptr[r + 1]; ++e) dense(r, a.col_index[e]) += a.values[e];
  if (bordered_) {
    for (std::size_t r = 0; r < n; ++r) {
      dense(r, n) = 1.0;
      dense(n, r) = 1.0;
    }
  }
  try {
    lu_.emplace(dense);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Singular) throw;
    qr_.emplace(dense);
  }
}

void CoarseSolver::solve(std::span<const double> f, std::span<double> u) const {
  const auto& unknowns = level_->op.unknowns();
  const std::size_t n = unknowns.size();
  std::vector<double> rhs(bordered_ ? n + 1 : n, 0.0);
  for (std::size_t r = 0; r < n; ++r) rhs[r] = f[unknowns[r]];
  std::vector<double> x;
  if (lu_) {
    x = lu_->solve(rhs);
  } else {
    x = qr_->solve(rhs);
  }
  std::fill(u.begin(), u.end(), 0.0);
  for (std::size_t r = 0; r < n; ++r) u[unknowns[r]] = x[r];
}

double CycleReport::geometric_mean(std::size_t first, std::size_t last) const {
  last = std::min(last, factors.size());
  if (first < 1 || first > last) return 0.0;
  double s = 0.0;
  for (std::size_t i = first; i <= last; ++i) s += std::log(factors[i - 1]);
  return std::exp(s / static_cast<double>(last - first + 1));
}

MGHierarchy::MGHierarchy(std::vector<std::unique_ptr<MGLevel>> levels, MGOptions options)
    : levels_(std::move(levels)), options_(options) {
  coarse_ = std::make_unique<CoarseSolver>(*levels_.back());
}

void MGHierarchy::cycle(std::span<double> u, std::span<const double> f) const { cycle_level(0, u, f); }

void MGHierarchy::cycle_level(std::size_t l, std::span<double> u, std::span<const double> f) const {
  const MGLevel& level = *levels_[l];
  if (l + 1 == levels_.size()) {
    coarse_->solve(f, u);
    return;
  }
  smooth_rbgs(level, u, f, options_.pre_sweeps);
  std::vector<double> r(level.size());
  level.residual(u, f, r);
  const MGLevel& next = *levels_[l + 1];
  std::vector<double> rc = restrict_halfweight(level.op.grid(), r);
  zero_exterior(rc, next.op.mask());
  std::vector<double> ec(next.size(), 0.0);
  const int visits = options_.kind == CycleKind::W && l + 2 < levels_.size() ? 2 : 1;
  for (int v = 0; v < visits; ++v) cycle_level(l + 1, ec, rc);
  const auto correction = prolong(next.op.grid(), ec, next.op.mask(), level.op.mask(), options_.prolongation);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] += correction[i];
  smooth_rbgs(level, u, f, options_.post_sweeps);
}

CycleReport MGHierarchy::iterate(std::span<double> u, std::span<const double> f, int iterations) const {
  CycleReport report;
  const MGLevel& fine = *levels_.front();
  std::vector<double> r(fine.size());
  fine.residual(u, f, r);
  report.residuals.push_back(linalg::norm2(r));
  for (int it = 0; it < iterations; ++it) {
    cycle(u, f);
    fine.residual(u, f, r);
    const double norm = linalg::norm2(r);
    const double prev = report.residuals.back();
    report.residuals.push_back(norm);
    if (prev == 0.0) break;
    report.factors.push_back(norm / prev);
  }
  return report;
}

MGHierarchy build_hierarchy(const SWOperator& fine, MGOptions options) {
  const int nx = fine.grid().nx;
  int n = nx;
  while (n > options.coarsest_nx && n % 2 == 0) n /= 2;
  if (n != options.coarsest_nx || fine.grid().ny != nx)
    throw Error(ErrorCode::BadResolution,
                "nx = " + std::to_string(nx) + " is not " + std::to_string(options.coarsest_nx) + " * 2^L");
  std::vector<std::unique_ptr<MGLevel>> levels;
  levels.push_back(std::make_unique<MGLevel>(fine));
  for (n = nx / 2; n >= options.coarsest_nx; n /= 2) {
    const Grid2D g = Grid2D::unit_square(n);
    levels.push_back(std::make_unique<MGLevel>(SWOperator(g, fine.geometry(), fine.config())));
  }
  return MGHierarchy(std::move(levels), options);
}

}  // namespace iim

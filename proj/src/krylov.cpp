// SPDX-License-Identifier: Apache-2.0
#include "iim/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iim/error.hpp"
#include "iim/linalg.hpp"

namespace iim {

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::Stagnation: return "stagnation";
  }
  return "unknown";
}

namespace {

struct Givens {
  double c = 1.0;
  double s = 0.0;
};

void apply_map(const LinearMap* m, std::span<const double> x, std::span<double> y) {
  if (m) {
    (*m)(x, y);
  } else {
    std::copy(x.begin(), x.end(), y.begin());
  }
}

/// Orthogonalises w against basis[0..j] twice (MGS then one more pass) and
/// accumulates the coefficients into h.
void orthogonalise(const std::vector<std::vector<double>>& basis, std::size_t j, std::vector<double>& w,
                   std::vector<double>& h) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i <= j; ++i) {
      const double c = linalg::dot(basis[i], w);
      h[i] += c;
      linalg::axpy(-c, basis[i], w);
    }
  }
}

bool stagnated(const std::vector<double>& residuals, int window) {
  const std::size_t n = residuals.size();
  if (window <= 0 || n <= static_cast<std::size_t>(window) || residuals.front() == 0.0) return false;
  const double now = residuals[n - 1] / residuals.front();
  const double then = residuals[n - 1 - static_cast<std::size_t>(window)] / residuals.front();
  return std::abs(then - now) < 1e-14;
}

/// Shared Arnoldi/Givens driver. With `flexible` the preconditioned
/// directions are stored and the update is x += Z y; otherwise left
/// preconditioning updates x += V y and right preconditioning x += M V y.
SolveReport run_gmres(const LinearMap& a, const LinearMap* m, std::span<const double> b,
                      std::span<double> x, const SolverConfig& config, PreconditionSide side,
                      bool flexible, int restart) {
  if (config.tolerance <= 0.0) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (config.restart < 0) throw Error(ErrorCode::InvalidArgument, "restart must be at least 1 when set");
  const std::size_t n = b.size();
  const bool left = side == PreconditionSide::Left;
  SolveReport report;
  report.preconditioned_residuals = left;

  std::vector<double> r(n), t(n), w(n);
  auto residual = [&] {
    a(x, t);
    for (std::size_t i = 0; i < n; ++i) t[i] = b[i] - t[i];
    if (left) {
      apply_map(m, t, r);
    } else {
      r = t;
    }
    return linalg::norm2(r);
  };

  double reference;
  if (left) {
    apply_map(m, b, w);
    reference = linalg::norm2(w);
  } else {
    reference = linalg::norm2(b);
  }
  double beta = residual();
  report.residuals.push_back(beta);
  if (reference == 0.0) reference = 1.0;
  const double target = config.tolerance * reference;
  if (beta <= target) {
    report.status = SolveStatus::Converged;
    return report;
  }

  const int cap = config.max_iterations;
  const int span = restart > 0 ? restart : cap;
  std::vector<std::vector<double>> v, z;
  while (report.iterations < cap) {
    v.assign(1, r);
    linalg::scale(1.0 / beta, v[0]);
    z.clear();
    std::vector<std::vector<double>> h;
    std::vector<Givens> rot;
    std::vector<double> g{beta};
    int inner = 0;
    while (inner < span && report.iterations < cap) {
      const std::size_t j = static_cast<std::size_t>(inner);
      if (left) {
        a(v[j], t);
        apply_map(m, t, w);
      } else {
        std::vector<double> zj(n);
        apply_map(m, v[j], zj);
        a(zj, w);
        if (flexible) z.push_back(std::move(zj));
      }
      std::vector<double> col(j + 2, 0.0);
      orthogonalise(v, j, w, col);
      col[j + 1] = linalg::norm2(w);
      for (std::size_t i = 0; i < j; ++i) {
        const double tmp = rot[i].c * col[i] + rot[i].s * col[i + 1];
        col[i + 1] = -rot[i].s * col[i] + rot[i].c * col[i + 1];
        col[i] = tmp;
      }
      const double denom = std::hypot(col[j], col[j + 1]);
      Givens gr;
      if (denom != 0.0) gr = {col[j] / denom, col[j + 1] / denom};
      const double hnext = col[j + 1];
      col[j] = denom;
      col[j + 1] = 0.0;
      rot.push_back(gr);
      g.push_back(-gr.s * g[j]);
      g[j] *= gr.c;
      h.push_back(std::move(col));
      ++inner;
      ++report.iterations;
      const double est = std::abs(g[j + 1]);
      report.residuals.push_back(est);
      if (est <= target || hnext <= 1e-14 * reference) break;
      if (stagnated(report.residuals, config.stagnation_window)) break;
      v.push_back(w);
      linalg::scale(1.0 / hnext, v.back());
    }

    // Back substitution on the rotated Hessenberg and update of x.
    const std::size_t k = h.size();
    std::vector<double> y(k, 0.0);
    for (std::size_t i = k; i-- > 0;) {
      double s = g[i];
      for (std::size_t l = i + 1; l < k; ++l) s -= h[l][i] * y[l];
      y[i] = h[i][i] != 0.0 ? s / h[i][i] : 0.0;
    }
    if (flexible) {
      for (std::size_t l = 0; l < k; ++l) linalg::axpy(y[l], z[l], x);
    } else {
      std::vector<double> update(n, 0.0);
      for (std::size_t l = 0; l < k; ++l) linalg::axpy(y[l], v[l], update);
      if (left) {
        linalg::axpy(1.0, update, x);
      } else {
        apply_map(m, update, t);
        linalg::axpy(1.0, t, x);
      }
    }

    beta = residual();
    // The recurrence estimate can drift from the recomputed residual; the
    // history keeps the recomputed value at cycle ends.
    report.residuals.back() = beta;
    if (beta <= target) {
      report.status = SolveStatus::Converged;
      return report;
    }
    if (stagnated(report.residuals, config.stagnation_window)) {
      report.status = SolveStatus::Stagnation;
      return report;
    }
  }
  report.status = SolveStatus::MaxIterations;
  return report;
}

}  // namespace

SolveReport gmres(const LinearMap& a, const LinearMap* m, std::span<const double> b, std::span<double> x,
                  const SolverConfig& config) {
  return run_gmres(a, m, b, x, config, config.side, false, config.restart);
}

SolveReport fgmres(const LinearMap& a, const LinearMap* m, std::span<const double> b, std::span<double> x,
                   const SolverConfig& config) {
  return run_gmres(a, m, b, x, config, PreconditionSide::Right, true, config.restart > 0 ? config.restart : 10);
}

SolveReport solve_augmented(const LinearMap& a, const LinearMap* m, const LinearMap* m_bordered,
                            std::span<const double> b, double gamma, std::span<double> x,
                            const SolverConfig& config) {
  const std::size_t n = b.size();
  const double count = static_cast<double>(n);
  LinearMap bordered = [&](std::span<const double> in, std::span<double> out) {
    a(in.first(n), out.first(n));
    const double alpha = in[n];
    for (std::size_t i = 0; i < n; ++i) out[i] += alpha;
    out[n] = std::accumulate(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
  };
  std::vector<double> centred(n), inner(n);
  LinearMap rank_one = [&](std::span<const double> in, std::span<double> out) {
    const double mean = std::accumulate(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / count;
    for (std::size_t i = 0; i < n; ++i) centred[i] = in[i] - mean;
    apply_map(m, centred, inner);
    const double inner_mean = std::accumulate(inner.begin(), inner.end(), 0.0) / count;
    const double shift = in[n] / count;
    for (std::size_t i = 0; i < n; ++i) out[i] = inner[i] - inner_mean + shift;
    out[n] = mean;
  };
  const LinearMap* p = m_bordered ? m_bordered : &rank_one;

  std::vector<double> rhs(b.begin(), b.end());
  rhs.push_back(gamma);
  std::vector<double> sol(x.begin(), x.end());
  sol.push_back(0.0);
  SolveReport report = run_gmres(bordered, p, rhs, sol, config, config.side, false, config.restart);
  std::copy(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(n), x.begin());
  report.alpha = sol[n];
  const double bnorm = linalg::norm2(b);
  if (std::abs(report.alpha) > 1e3 * bnorm && std::abs(report.alpha) > 0.0)
    throw Error(ErrorCode::Incompatible, "null-space shift " + std::to_string(report.alpha) +
                                             " exceeds 1e3 |b| = " + std::to_string(1e3 * bnorm));
  return report;
}

}  // namespace iim

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace iim {

/// y = A x. Vectors are compact (one entry per unknown).
using LinearMap = std::function<void(std::span<const double> x, std::span<double> y)>;

enum class PreconditionSide { Left, Right };

struct SolverConfig {
  double tolerance = 1e-6;
  int max_iterations = 500;
  /// 0 means no restart.
  int restart = 0;
  PreconditionSide side = PreconditionSide::Left;
  /// Iterations over which a stalled residual counts as stagnation.
  int stagnation_window = 20;
};

/// 1e-6 / nx, the outer tolerance used throughout the solver studies.
inline double default_tolerance(int nx) { return 1e-6 / nx; }

enum class SolveStatus { Converged, MaxIterations, Stagnation };
std::string_view to_string(SolveStatus s);

struct SolveReport {
  int iterations = 0;
  /// Residual norms per iteration, starting with the initial one.
  /// Preconditioned for left preconditioning, true residuals otherwise.
  std::vector<double> residuals;
  bool preconditioned_residuals = true;
  SolveStatus status = SolveStatus::MaxIterations;
  /// Shift of the bordered system (0 for regular solves).
  double alpha = 0.0;

  bool converged() const { return status == SolveStatus::Converged; }
};

/// GMRES with modified Gram-Schmidt plus one re-orthogonalisation pass and
/// Givens rotations. Left preconditioning stops on |M(b - A x)| <= tol |M b|;
/// right preconditioning stops on |b - A x| <= tol |b|. Null M means identity.
SolveReport gmres(const LinearMap& a, const LinearMap* m, std::span<const double> b,
                  std::span<double> x, const SolverConfig& config);

/// Right-preconditioned flexible GMRES (the preconditioned directions are
/// stored, so M may change between iterations). Restarts every
/// config.restart iterations (10 when unset).
SolveReport fgmres(const LinearMap& a, const LinearMap* m, std::span<const double> b,
                   std::span<double> x, const SolverConfig& config);

/// Solves [[A, 1], [1^T, 0]] [x; alpha] = [b; gamma] for singular A with
/// A 1 = 0. `m` approximates A's inverse on its range and is wrapped as
/// P [r; s] = [Z M (r - mean(r) 1) + (s / n) 1; mean(r)], Z removing the mean.
/// `m_bordered`, when given, acts on the (n + 1)-vectors directly instead.
/// Throws INCOMPATIBLE when |alpha| > 1e3 |b|.
SolveReport solve_augmented(const LinearMap& a, const LinearMap* m, const LinearMap* m_bordered,
                            std::span<const double> b, double gamma, std::span<double> x,
                            const SolverConfig& config);

}  // namespace iim

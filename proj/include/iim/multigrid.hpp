// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "iim/linalg.hpp"
#include "iim/shortley_weller.hpp"

namespace iim {

enum class CycleKind { V, W };

/// How coarse corrections are interpolated next to the surface.
enum class ProlongationKind {
  DomainAware,  // average of the in-domain coarse neighbours only
  Bilinear,     // plain bilinear with exterior coarse values taken as zero
};

struct MGOptions {
  int coarsest_nx = 8;
  int pre_sweeps = 2;
  int post_sweeps = 2;
  CycleKind kind = CycleKind::V;
  ProlongationKind prolongation = ProlongationKind::DomainAware;
};

/// One multigrid level: the SW operator with its rows split into node
/// indices for in-place sweeps on full-grid vectors.
struct MGLevel {
  explicit MGLevel(SWOperator op);

  SWOperator op;
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> cols;  // node indices
  std::vector<double> values;
  std::vector<double> diagonal;   // per unknown
  std::vector<std::size_t> red;   // unknown positions with i + j even
  std::vector<std::size_t> black;

  std::size_t size() const { return op.grid().size(); }
  /// r = f - A u over unknowns; exterior entries 0.
  void residual(std::span<const double> u, std::span<const double> f, std::span<double> r) const;
};

/// Direct solve on the coarsest level. Singular levels use the bordered
/// system with gamma = 0, falling back to least squares when even that is
/// singular.
class CoarseSolver {
 public:
  explicit CoarseSolver(const MGLevel& level);
  void solve(std::span<const double> f, std::span<double> u) const;

 private:
  const MGLevel* level_;
  bool bordered_ = false;
  std::optional<linalg::LuFactorization> lu_;
  std::optional<linalg::PivotedQR> qr_;
};

struct CycleReport {
  std::vector<double> residuals;  // |r^0|, |r^1|, ...
  std::vector<double> factors;    // rho_i = |r^i| / |r^(i-1)|

  /// Geometric mean of factors[first-1 .. last-1] (1-based iteration numbers).
  double geometric_mean(std::size_t first, std::size_t last) const;
};

class MGHierarchy {
 public:
  MGHierarchy(std::vector<std::unique_ptr<MGLevel>> levels, MGOptions options);

  std::size_t level_count() const { return levels_.size(); }
  const MGLevel& level(std::size_t l) const { return *levels_[l]; }
  const MGOptions& options() const { return options_; }

  /// One cycle on the finest level, updating u in place (full-grid vectors).
  void cycle(std::span<double> u, std::span<const double> f) const;
  /// Runs `iterations` cycles from u and records fine-level residual norms.
  CycleReport iterate(std::span<double> u, std::span<const double> f, int iterations) const;

 private:
  void cycle_level(std::size_t l, std::span<double> u, std::span<const double> f) const;

  std::vector<std::unique_ptr<MGLevel>> levels_;
  MGOptions options_;
  std::unique_ptr<CoarseSolver> coarse_;
};

/// Rebuilds the SW operator of `fine` on grids halved down to
/// options.coarsest_nx. Throws BAD_RESOLUTION unless nx = coarsest * 2^L.
MGHierarchy build_hierarchy(const SWOperator& fine, MGOptions options = {});

/// Red-black Gauss-Seidel sweeps on the level system, red (i + j even) first.
/// Throws ZERO_DIAGONAL when a diagonal entry vanishes.
void smooth_rbgs(const MGLevel& level, std::span<double> u, std::span<const double> f, int sweeps);

/// Half-weighting (centre 1/2, edge neighbours 1/8) from a grid of 2n to n
/// nodes per axis, periodic.
std::vector<double> restrict_halfweight(const Grid2D& fine, std::span<const double> r);

/// Coarse to fine interpolation. `coarse_mask` marks which coarse values
/// count as in the domain; exterior fine nodes (per `fine_mask`) get 0.
std::vector<double> prolong(const Grid2D& coarse, std::span<const double> e,
                            std::span<const PointClass> coarse_mask,
                            std::span<const PointClass> fine_mask, ProlongationKind kind);

}  // namespace iim

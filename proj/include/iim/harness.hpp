// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iim/geometry.hpp"
#include "iim/krylov.hpp"
#include "iim/multigrid.hpp"
#include "iim/operator.hpp"

namespace iim {

enum class StudyKind { Converge, Truncation, Iterations, Mgrate, Spectrum, Solve };

std::string_view to_string(StudyKind s);
std::string_view to_string(Condition c);
StudyKind parse_study(std::string_view s);
Condition parse_condition(std::string_view s);

/// Everything a study needs. Run files hold one `key = value` per line with
/// `#` comments; keys match the names accepted by set_option().
struct RunSpec {
  StudyKind study = StudyKind::Converge;
  std::string geometry = "star";
  std::map<std::string, double> geometry_params;
  Condition condition = Condition::Dirichlet;
  int order = 4;
  int boundary_order = 5;
  std::vector<int> resolutions{64, 128, 256, 512};
  double beta_plus = 1.0;
  double beta_minus = 1.0;
  /// "sine" or "interface"; empty picks "interface" for jumps, else "sine".
  std::string solution;
  std::string out;
  /// Outer relative tolerance; 0 means 1e-6 / nx.
  double tolerance = 0.0;
  int max_iterations = 500;
  int restart = 0;
  std::string solver = "gmres";  // gmres | fgmres
  PreconditionSide side = PreconditionSide::Left;
  /// none, mg, sw, or iimNK for the exact inverse of the (N, K) operator.
  std::vector<std::string> preconditioners{"mg"};
  CycleKind cycle = CycleKind::V;
  ProlongationKind prolongation = ProlongationKind::DomainAware;
  int mg_iterations = 10;
  int krylov_dim = 200;
  double gamma = 0.0;
  std::string dump;

  std::string solution_name() const;
};

/// Sets one option from its run-file key. Throws INVALID_ARGUMENT on unknown
/// keys or unparsable values.
void set_option(RunSpec& spec, std::string_view key, std::string_view value);
RunSpec parse_run_spec(std::string_view text);
RunSpec load_run_file(const std::string& path);
/// Checks the (n, k) pair and resolutions. Throws INVALID_ARGUMENT.
void validate(const RunSpec& spec);
/// Single-line `key = value; ...` rendering that parse_run_spec() reads back
/// after replacing "; " with newlines.
std::string describe(const RunSpec& spec);

/// Exact solution with derivatives, possibly different on each side.
struct ManufacturedCase {
  std::string name;
  std::function<double(Vec2, Side)> u;
  std::function<Vec2(Vec2, Side)> gradient;
  std::function<double(Vec2, Side)> laplacian;
};

/// "sine": u = sin(4 pi x) sin(2 pi y) on both sides.
/// "interface": u+ = 0.6 + 0.4 sin(4 pi x) sin(2 pi y), u- = sin(4 pi x) sin(2 pi y).
ManufacturedCase manufactured_case(const std::string& name);

/// Discrete problem L u = f - L_Gamma g for a manufactured case.
struct Problem {
  Problem(const Grid2D& grid, const LevelSetGeometry& geometry, OperatorConfig config,
          ManufacturedCase mc);

  ImmersedOperator op;
  ManufacturedCase mc;
  BoundaryData data;
  std::vector<double> exact;  // full grid, exterior 0
  std::vector<double> forcing;
  /// Compact right-hand side f - L_Gamma g over op.unknowns().
  std::vector<double> rhs;
  linalg::SparseMatrix matrix;

  double beta_on(Side s) const;
  /// Exact boundary_quantity() values at the control points.
  std::vector<double> exact_boundary_quantity() const;
};

/// A preconditioner for the compact system: either a plain map M ~ A^-1 or
/// a map acting on bordered (n + 1)-vectors.
struct Preconditioner {
  std::string name;
  std::optional<LinearMap> map;
  std::optional<LinearMap> bordered;
  std::shared_ptr<void> state;
};

/// Builds a named preconditioner for `problem` (see RunSpec::preconditioners).
Preconditioner make_preconditioner(const Problem& problem, const std::string& name,
                                   const RunSpec& spec);

struct SolveOutcome {
  std::vector<double> u;  // full grid
  SolveReport report;
  /// 1^T x - gamma for bordered solves, 0 otherwise.
  double constraint_residual = 0.0;
  double solution_norm = 0.0;
  double tolerance = 0.0;
};

SolveOutcome solve_problem(const Problem& problem, const Preconditioner& pre, const RunSpec& spec);

struct ErrorNorms {
  double solution = 0.0;
  double boundary = 0.0;
  double gradient = 0.0;
};

/// L-infinity errors; singular problems are compared after shifting the
/// numerical solution to the exact mean.
ErrorNorms measure_errors(const Problem& problem, std::span<const double> u);

/// Order of convergence: minus the least-squares slope of log2(error)
/// against log2(nx).
double fitted_order(const std::vector<int>& nx, const std::vector<double>& error);

struct ConvergeRow {
  int nx = 0;
  ErrorNorms errors;
  int iterations = 0;
  bool converged = false;
  double constraint_residual = 0.0;
  double constraint_bound = 0.0;
};
struct ConvergeResult {
  std::vector<ConvergeRow> rows;
  double solution_order = 0.0;
  double boundary_order = 0.0;
  double gradient_order = 0.0;
};

struct TruncationRow {
  int nx = 0;
  double affected = 0.0;
  double interior = 0.0;
};
struct TruncationResult {
  std::vector<TruncationRow> rows;
  double affected_order = 0.0;
  double interior_order = 0.0;
};

struct IterationsRow {
  int nx = 0;
  std::string preconditioner;
  int iterations = 0;
  bool converged = false;
};
struct IterationsResult {
  std::vector<IterationsRow> rows;
};

struct MgrateRow {
  int nx = 0;
  CycleReport report;
  double mean_rate = 0.0;  // geometric mean over iterations 2..mg_iterations
};
struct MgrateResult {
  std::vector<MgrateRow> rows;
};

struct SpectrumRow {
  int nx = 0;
  SpectrumResult spectrum;
};
struct SpectrumStudy {
  std::vector<SpectrumRow> rows;
};

struct SolveRow {
  int nx = 0;
  SolveReport report;
  double solution_error = 0.0;
  double residual = 0.0;  // |f - L_Gamma g - L u|_inf / |f - L_Gamma g|_inf
  std::string dump_path;
};
struct SolveStudy {
  std::vector<SolveRow> rows;
};

ConvergeResult run_converge(const RunSpec& spec);
TruncationResult run_truncation(const RunSpec& spec);
IterationsResult run_iterations(const RunSpec& spec);
MgrateResult run_mgrate(const RunSpec& spec);
SpectrumStudy run_spectrum(const RunSpec& spec);
SolveStudy run_solve(const RunSpec& spec);

/// Homogeneous-data multigrid iteration on the Shortley-Weller system with
/// the manufactured forcing (made consistent for singular problems).
MgrateRow mgrate_entry(const RunSpec& spec, int nx);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable to_table(const ConvergeResult& r);
CsvTable to_table(const TruncationResult& r);
CsvTable to_table(const IterationsResult& r);
CsvTable to_table(const MgrateResult& r);
CsvTable to_table(const SpectrumStudy& r);
CsvTable to_table(const SolveStudy& r);

/// Header, rows, then a `# runspec: ...` comment line.
std::string format_csv(const CsvTable& table, const RunSpec& spec);

/// Field dump: "IIMFLD01", nx and ny as little-endian uint64, then nx * ny
/// little-endian doubles in row-major order. Throws IO on failure.
void write_field(const std::string& path, int nx, int ny, std::span<const double> values);
struct FieldDump {
  std::uint64_t nx = 0;
  std::uint64_t ny = 0;
  std::vector<double> values;
};
FieldDump read_field(const std::string& path);

}  // namespace iim

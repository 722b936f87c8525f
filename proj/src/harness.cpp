// SPDX-License-Identifier: Apache-2.0
#include "iim/harness.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#ifdef IIM_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "iim/error.hpp"

namespace iim {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(',', start);
    const std::string item = trim(s.substr(start, end == std::string_view::npos ? s.npos : end - start));
    if (!item.empty()) out.push_back(item);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  const std::string s = trim(v);
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidArgument, std::string(key) + ": not a number: '" + s + "'");
}

int parse_int(std::string_view key, std::string_view v) {
  const std::string s = trim(v);
  int out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw Error(ErrorCode::InvalidArgument, std::string(key) + ": not an integer: '" + s + "'");
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_mg_resolution(int nx) {
  if (nx < 8) return false;
  while (nx > 8 && nx % 2 == 0) nx /= 2;
  return nx == 8;
}

}  // namespace

std::string_view to_string(StudyKind s) {
  switch (s) {
    case StudyKind::Converge: return "converge";
    case StudyKind::Truncation: return "truncation";
    case StudyKind::Iterations: return "iterations";
    case StudyKind::Mgrate: return "mgrate";
    case StudyKind::Spectrum: return "spectrum";
    case StudyKind::Solve: return "solve";
  }
  return "unknown";
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::Dirichlet: return "dirichlet";
    case Condition::Neumann: return "neumann";
    case Condition::Jump: return "jump";
  }
  return "unknown";
}

StudyKind parse_study(std::string_view s) {
  const std::string v = lower(trim(s));
  for (StudyKind k : {StudyKind::Converge, StudyKind::Truncation, StudyKind::Iterations, StudyKind::Mgrate,
                      StudyKind::Spectrum, StudyKind::Solve})
    if (v == to_string(k)) return k;
  throw Error(ErrorCode::InvalidArgument, "unknown study '" + v + "'");
}

Condition parse_condition(std::string_view s) {
  const std::string v = lower(trim(s));
  for (Condition c : {Condition::Dirichlet, Condition::Neumann, Condition::Jump})
    if (v == to_string(c)) return c;
  throw Error(ErrorCode::InvalidArgument, "unknown boundary condition '" + v + "'");
}

std::string RunSpec::solution_name() const {
  if (!solution.empty()) return solution;
  return condition == Condition::Jump ? "interface" : "sine";
}

void set_option(RunSpec& spec, std::string_view key_in, std::string_view value) {
  const std::string key = lower(trim(key_in));
  const std::string v = trim(value);
  if (key == "study") {
    spec.study = parse_study(v);
  } else if (key == "geometry") {
    spec.geometry = lower(v);
  } else if (key.rfind("geometry.", 0) == 0) {
    spec.geometry_params[key.substr(9)] = parse_double(key, v);
  } else if (key == "bc" || key == "condition") {
    spec.condition = parse_condition(v);
  } else if (key == "order") {
    spec.order = parse_int(key, v);
  } else if (key == "border" || key == "boundary_order") {
    spec.boundary_order = parse_int(key, v);
  } else if (key == "nx" || key == "resolutions") {
    spec.resolutions.clear();
    for (const auto& item : split_list(v)) spec.resolutions.push_back(parse_int(key, item));
  } else if (key == "beta_plus" || key == "beta-plus") {
    spec.beta_plus = parse_double(key, v);
  } else if (key == "beta_minus" || key == "beta-minus") {
    spec.beta_minus = parse_double(key, v);
  } else if (key == "solution") {
    spec.solution = lower(v);
  } else if (key == "out") {
    spec.out = v;
  } else if (key == "tolerance") {
    spec.tolerance = parse_double(key, v);
  } else if (key == "max_iterations") {
    spec.max_iterations = parse_int(key, v);
  } else if (key == "restart") {
    spec.restart = parse_int(key, v);
  } else if (key == "solver") {
    spec.solver = lower(v);
    if (spec.solver != "gmres" && spec.solver != "fgmres")
      throw Error(ErrorCode::InvalidArgument, "unknown solver '" + spec.solver + "'");
  } else if (key == "side") {
    const std::string s = lower(v);
    if (s == "left") {
      spec.side = PreconditionSide::Left;
    } else if (s == "right") {
      spec.side = PreconditionSide::Right;
    } else {
      throw Error(ErrorCode::InvalidArgument, "side must be left or right");
    }
  } else if (key == "preconditioner" || key == "preconditioners") {
    spec.preconditioners.clear();
    for (const auto& item : split_list(v)) spec.preconditioners.push_back(lower(item));
  } else if (key == "cycle") {
    const std::string s = lower(v);
    if (s == "v") {
      spec.cycle = CycleKind::V;
    } else if (s == "w") {
      spec.cycle = CycleKind::W;
    } else {
      throw Error(ErrorCode::InvalidArgument, "cycle must be v or w");
    }
  } else if (key == "prolongation") {
    const std::string s = lower(v);
    if (s == "domain") {
      spec.prolongation = ProlongationKind::DomainAware;
    } else if (s == "bilinear") {
      spec.prolongation = ProlongationKind::Bilinear;
    } else {
      throw Error(ErrorCode::InvalidArgument, "prolongation must be domain or bilinear");
    }
  } else if (key == "mg_iterations") {
    spec.mg_iterations = parse_int(key, v);
  } else if (key == "krylov_dim") {
    spec.krylov_dim = parse_int(key, v);
  } else if (key == "gamma") {
    spec.gamma = parse_double(key, v);
  } else if (key == "dump") {
    spec.dump = v;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown run-file key '" + key + "'");
  }
}

RunSpec parse_run_spec(std::string_view text) {
  RunSpec spec;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(number) + ": expected key = value");
    set_option(spec, line.substr(0, eq), line.substr(eq + 1));
  }
  return spec;
}

RunSpec load_run_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open run file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_spec(buf.str());
}

void validate(const RunSpec& spec) {
  if (spec.order != 2 && spec.order != 4 && spec.order != 6)
    throw Error(ErrorCode::InvalidArgument, "order must be 2, 4 or 6");
  if (spec.boundary_order < 3 || spec.boundary_order > 8)
    throw Error(ErrorCode::InvalidArgument, "boundary order must lie in 3..8");
  if (spec.resolutions.empty()) throw Error(ErrorCode::InvalidArgument, "no resolutions given");
  for (int nx : spec.resolutions)
    if (!is_mg_resolution(nx))
      throw Error(ErrorCode::InvalidArgument, "nx = " + std::to_string(nx) + " is not 8 * 2^L");
  if (spec.beta_plus <= 0.0 || spec.beta_minus <= 0.0)
    throw Error(ErrorCode::InvalidArgument, "beta values must be positive");
  if (spec.max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be positive");
  if (spec.tolerance < 0.0) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  const std::string sol = spec.solution_name();
  if (sol != "sine" && sol != "interface")
    throw Error(ErrorCode::InvalidArgument, "unknown manufactured solution '" + sol + "'");
}

std::string describe(const RunSpec& spec) {
  std::vector<std::string> parts;
  auto add = [&](const std::string& k, const std::string& v) { parts.push_back(k + " = " + v); };
  add("study", std::string(to_string(spec.study)));
  add("geometry", spec.geometry);
  for (const auto& [k, v] : spec.geometry_params) add("geometry." + k, fmt_short(v));
  add("bc", std::string(to_string(spec.condition)));
  add("order", std::to_string(spec.order));
  add("border", std::to_string(spec.boundary_order));
  std::string nx;
  for (int n : spec.resolutions) nx += (nx.empty() ? "" : ",") + std::to_string(n);
  add("nx", nx);
  add("beta_plus", fmt_short(spec.beta_plus));
  add("beta_minus", fmt_short(spec.beta_minus));
  add("solution", spec.solution_name());
  if (!spec.out.empty()) add("out", spec.out);
  add("tolerance", fmt_short(spec.tolerance));
  add("max_iterations", std::to_string(spec.max_iterations));
  add("restart", std::to_string(spec.restart));
  add("solver", spec.solver);
  add("side", spec.side == PreconditionSide::Left ? "left" : "right");
  std::string pre;
  for (const auto& p : spec.preconditioners) pre += (pre.empty() ? "" : ",") + p;
  add("preconditioner", pre);
  add("cycle", spec.cycle == CycleKind::V ? "v" : "w");
  add("prolongation", spec.prolongation == ProlongationKind::DomainAware ? "domain" : "bilinear");
  add("mg_iterations", std::to_string(spec.mg_iterations));
  add("krylov_dim", std::to_string(spec.krylov_dim));
  add("gamma", fmt_short(spec.gamma));
  if (!spec.dump.empty()) add("dump", spec.dump);
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
  return out;
}

ManufacturedCase manufactured_case(const std::string& name) {
  constexpr double pi = std::numbers::pi;
  auto s = [](Vec2 x) { return std::sin(4 * pi * x.x) * std::sin(2 * pi * x.y); };
  auto ds = [](Vec2 x) {
    return Vec2{4 * pi * std::cos(4 * pi * x.x) * std::sin(2 * pi * x.y),
                2 * pi * std::sin(4 * pi * x.x) * std::cos(2 * pi * x.y)};
  };
  auto lap = [s](Vec2 x) { return -20 * pi * pi * s(x); };
  ManufacturedCase mc;
  mc.name = name;
  if (name == "sine") {
    mc.u = [s](Vec2 x, Side) { return s(x); };
    mc.gradient = [ds](Vec2 x, Side) { return ds(x); };
    mc.laplacian = [lap](Vec2 x, Side) { return lap(x); };
  } else if (name == "interface") {
    mc.u = [s](Vec2 x, Side side) { return side == Side::Plus ? 0.6 + 0.4 * s(x) : s(x); };
    mc.gradient = [ds](Vec2 x, Side side) { return side == Side::Plus ? 0.4 * ds(x) : ds(x); };
    mc.laplacian = [lap](Vec2 x, Side side) { return side == Side::Plus ? 0.4 * lap(x) : lap(x); };
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown manufactured solution '" + name + "'");
  }
  return mc;
}

Problem::Problem(const Grid2D& grid, const LevelSetGeometry& geometry, OperatorConfig config, ManufacturedCase mc_in)
    : op(grid, geometry, config), mc(std::move(mc_in)) {
  const auto& cps = op.control_points();
  data.resize(cps.size());
  for (std::size_t c = 0; c < cps.size(); ++c) {
    const Vec2 x = cps[c].position;
    const Vec2 n = cps[c].normal;
    const double up = mc.u(x, Side::Plus);
    const double fp = config.beta_plus * dot(n, mc.gradient(x, Side::Plus));
    switch (config.condition) {
      case Condition::Dirichlet: data[c].value = up; break;
      case Condition::Neumann: data[c].flux = fp; break;
      case Condition::Jump:
        data[c].value = up - mc.u(x, Side::Minus);
        data[c].flux = fp - config.beta_minus * dot(n, mc.gradient(x, Side::Minus));
        break;
    }
  }
  exact.assign(grid.size(), 0.0);
  forcing.assign(grid.size(), 0.0);
  for (std::size_t p : op.unknowns()) {
    const Vec2 x = grid.position(p);
    const Side s = op.side(p);
    exact[p] = mc.u(x, s);
    forcing[p] = beta_on(s) * mc.laplacian(x, s);
  }
  const auto lg = op.boundary_term(data);
  rhs.resize(op.unknowns().size());
  for (std::size_t r = 0; r < rhs.size(); ++r) {
    const std::size_t p = op.unknowns()[r];
    rhs[r] = forcing[p] - lg[p];
  }
  matrix = op.assemble();
}

double Problem::beta_on(Side s) const {
  return s == Side::Plus ? op.config().beta_plus : op.config().beta_minus;
}

std::vector<double> Problem::exact_boundary_quantity() const {
  const auto& cps = op.control_points();
  std::vector<double> out(cps.size());
  for (std::size_t c = 0; c < cps.size(); ++c) {
    const Vec2 x = cps[c].position;
    const double dn = dot(cps[c].normal, mc.gradient(x, Side::Plus));
    switch (op.config().condition) {
      case Condition::Dirichlet: out[c] = op.config().beta_plus * dn; break;
      case Condition::Neumann: out[c] = mc.u(x, Side::Plus); break;
      case Condition::Jump: out[c] = dn; break;
    }
  }
  return out;
}

namespace {

using EigenMatrix = Eigen::SparseMatrix<double>;
#ifdef IIM_HAVE_UMFPACK
using SparseFactor = Eigen::UmfPackLU<EigenMatrix>;
#else
using SparseFactor = Eigen::SparseLU<EigenMatrix>;
#endif

EigenMatrix to_eigen(const linalg::SparseMatrix& a, bool bordered) {
  const std::size_t n = a.rows;
  const auto m = static_cast<Eigen::Index>(bordered ? n + 1 : n);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(a.nonzeros() + (bordered ? 2 * n : 0));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t e = a.row_ptr[r]; e < a.row_ptr[r + 1]; ++e)
      t.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a.col_index[e]), a.values[e]);
    if (bordered) {
      t.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(n), 1.0);
      t.emplace_back(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r), 1.0);
    }
  }
  EigenMatrix out(m, m);
  out.setFromTriplets(t.begin(), t.end());
  out.makeCompressed();
  return out;
}

/// Sparse LU of a (possibly bordered) assembled matrix.
struct ExactInverse {
  EigenMatrix matrix;  // UMFPACK reads it again during solves
  SparseFactor lu;
  std::vector<double> scale;  // multiplies the first n input entries
  std::size_t n = 0;
  bool bordered = false;

  ExactInverse(const linalg::SparseMatrix& a, bool border, std::vector<double> row_scale)
      : matrix(to_eigen(a, border)), scale(std::move(row_scale)), n(a.rows), bordered(border) {
    lu.compute(matrix);
    if (lu.info() != Eigen::Success) throw Error(ErrorCode::Singular, "sparse LU factorization failed");
  }

  void apply(std::span<const double> in, std::span<double> out) const {
    Eigen::VectorXd b(static_cast<Eigen::Index>(in.size()));
    for (std::size_t i = 0; i < in.size(); ++i) b[static_cast<Eigen::Index>(i)] = i < n ? in[i] * scale[i] : in[i];
    const Eigen::VectorXd x = lu.solve(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[static_cast<Eigen::Index>(i)];
  }
};

struct MultigridState {
  SWOperator sw;
  MGHierarchy hierarchy;
  std::vector<std::size_t> unknowns;
  std::vector<double> inv_beta;  // per unknown
  std::vector<double> f, u;

  MultigridState(SWOperator op, MGOptions options)
      : sw(std::move(op)), hierarchy(build_hierarchy(sw, options)), unknowns(sw.unknowns()) {
    f.assign(sw.grid().size(), 0.0);
    u.assign(sw.grid().size(), 0.0);
  }

  void apply(std::span<const double> in, std::span<double> out) {
    std::fill(f.begin(), f.end(), 0.0);
    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t r = 0; r < unknowns.size(); ++r) f[unknowns[r]] = in[r] * inv_beta[r];
    hierarchy.cycle(u, f);
    for (std::size_t r = 0; r < unknowns.size(); ++r) out[r] = u[unknowns[r]];
  }
};

SWConfig sw_config(const OperatorConfig& c) {
  SWConfig s;
  s.condition = c.condition;
  s.beta_plus = c.beta_plus;
  s.beta_minus = c.beta_minus;
  return s;
}

std::vector<double> inverse_beta(const ImmersedOperator& op) {
  std::vector<double> out(op.unknowns().size());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = 1.0 / op.beta(op.unknowns()[r]);
  return out;
}

}  // namespace

Preconditioner make_preconditioner(const Problem& problem, const std::string& name, const RunSpec& spec) {
  const ImmersedOperator& op = problem.op;
  const std::size_t n = op.unknowns().size();
  Preconditioner pre;
  pre.name = name;
  if (name == "none") return pre;

  if (name == "mg") {
    MGOptions options;
    options.kind = spec.cycle;
    options.prolongation = spec.prolongation;
    auto state = std::make_shared<MultigridState>(SWOperator(op.grid(), op.geometry(), sw_config(op.config())),
                                                  options);
    if (state->unknowns != op.unknowns())
      throw Error(ErrorCode::InvalidArgument, "multigrid unknowns differ from the operator's");
    state->inv_beta = inverse_beta(op);
    pre.map = [s = state.get()](std::span<const double> in, std::span<double> out) { s->apply(in, out); };
    pre.state = state;
    return pre;
  }

  linalg::SparseMatrix matrix;
  std::vector<double> scale(n, 1.0);
  bool singular = false;
  if (name == "sw") {
    SWOperator sw(op.grid(), op.geometry(), sw_config(op.config()));
    if (sw.unknowns() != op.unknowns())
      throw Error(ErrorCode::InvalidArgument, "Shortley-Weller unknowns differ from the operator's");
    matrix = sw.matrix();
    scale = inverse_beta(op);
    singular = sw.singular();
  } else if (name.size() == 5 && name.rfind("iim", 0) == 0 && std::isdigit(name[3]) && std::isdigit(name[4])) {
    OperatorConfig c = op.config();
    c.order = name[3] - '0';
    c.boundary_order = name[4] - '0';
    ImmersedOperator low(op.grid(), op.geometry(), c);
    if (low.unknowns() != op.unknowns())
      throw Error(ErrorCode::InvalidArgument, "low-order unknowns differ from the operator's");
    matrix = low.assemble();
    singular = low.singular();
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown preconditioner '" + name + "'");
  }
  auto state = std::make_shared<ExactInverse>(matrix, singular, std::move(scale));
  LinearMap map = [s = state.get()](std::span<const double> in, std::span<double> out) { s->apply(in, out); };
  if (singular) {
    pre.bordered = std::move(map);
  } else {
    pre.map = std::move(map);
  }
  pre.state = state;
  return pre;
}

SolveOutcome solve_problem(const Problem& problem, const Preconditioner& pre, const RunSpec& spec) {
  const ImmersedOperator& op = problem.op;
  const std::size_t n = op.unknowns().size();
  const int nx = op.grid().nx;
  SolverConfig config;
  config.tolerance = spec.tolerance > 0.0 ? spec.tolerance : default_tolerance(nx);
  config.max_iterations = spec.max_iterations;
  config.restart = spec.restart;
  config.side = spec.side;

  LinearMap a = [&](std::span<const double> in, std::span<double> out) { problem.matrix.multiply(in, out); };
  std::vector<double> x(n, 0.0);
  SolveOutcome outcome;
  outcome.tolerance = config.tolerance;
  const LinearMap* m = pre.map ? &*pre.map : nullptr;
  if (op.singular()) {
    if (spec.solver == "fgmres") throw Error(ErrorCode::InvalidArgument, "fgmres is not wired to bordered systems");
    const LinearMap* mb = pre.bordered ? &*pre.bordered : nullptr;
    outcome.report = solve_augmented(a, m, mb, problem.rhs, spec.gamma, x, config);
    outcome.constraint_residual = std::accumulate(x.begin(), x.end(), 0.0) - spec.gamma;
  } else {
    if (pre.bordered) throw Error(ErrorCode::InvalidArgument, "bordered preconditioner on a regular system");
    outcome.report = spec.solver == "fgmres" ? fgmres(a, m, problem.rhs, x, config) : gmres(a, m, problem.rhs, x, config);
  }
  outcome.solution_norm = linalg::norm2(x);
  outcome.u.assign(op.grid().size(), 0.0);
  for (std::size_t r = 0; r < n; ++r) outcome.u[op.unknowns()[r]] = x[r];
  return outcome;
}

ErrorNorms measure_errors(const Problem& problem, std::span<const double> u_in) {
  const ImmersedOperator& op = problem.op;
  std::vector<double> u(u_in.begin(), u_in.end());
  if (op.singular()) {
    const double shift = masked_mean(problem.exact, op.mask()) - masked_mean(u, op.mask());
    for (std::size_t p : op.unknowns()) u[p] += shift;
  }
  ErrorNorms e;
  for (std::size_t p : op.unknowns()) e.solution = std::max(e.solution, std::abs(u[p] - problem.exact[p]));
  const auto bq = op.boundary_quantity(u, problem.data);
  const auto bq_exact = problem.exact_boundary_quantity();
  for (std::size_t c = 0; c < bq.size(); ++c) e.boundary = std::max(e.boundary, std::abs(bq[c] - bq_exact[c]));
  const auto grad = op.gradient(u, problem.data);
  for (std::size_t p : op.unknowns()) {
    const Vec2 g = problem.mc.gradient(op.grid().position(p), op.side(p));
    e.gradient = std::max({e.gradient, std::abs(grad[0][p] - g.x), std::abs(grad[1][p] - g.y)});
  }
  return e;
}

double fitted_order(const std::vector<int>& nx, const std::vector<double>& error) {
  if (nx.size() != error.size() || nx.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "slope fit needs at least two points");
  const double count = static_cast<double>(nx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < nx.size(); ++i) {
    const double x = std::log2(static_cast<double>(nx[i]));
    const double y = std::log2(error[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return -(count * sxy - sx * sy) / (count * sxx - sx * sx);
}

namespace {

OperatorConfig operator_config(const RunSpec& spec) {
  OperatorConfig c;
  c.order = spec.order;
  c.boundary_order = spec.boundary_order;
  c.condition = spec.condition;
  c.beta_plus = spec.beta_plus;
  c.beta_minus = spec.beta_minus;
  return c;
}

Problem make_problem(const RunSpec& spec, int nx) {
  return Problem(Grid2D::unit_square(nx), make_geometry(spec.geometry, spec.geometry_params), operator_config(spec),
                 manufactured_case(spec.solution_name()));
}

}  // namespace

ConvergeResult run_converge(const RunSpec& spec) {
  validate(spec);
  ConvergeResult result;
  std::vector<double> es, eb, eg;
  for (int nx : spec.resolutions) {
    const Problem problem = make_problem(spec, nx);
    const Preconditioner pre = make_preconditioner(problem, spec.preconditioners.front(), spec);
    const SolveOutcome out = solve_problem(problem, pre, spec);
    ConvergeRow row;
    row.nx = nx;
    row.errors = measure_errors(problem, out.u);
    row.iterations = out.report.iterations;
    row.converged = out.report.converged();
    row.constraint_residual = out.constraint_residual;
    row.constraint_bound =
        out.tolerance * out.solution_norm * std::sqrt(static_cast<double>(problem.op.unknowns().size()));
    result.rows.push_back(row);
    es.push_back(row.errors.solution);
    eb.push_back(row.errors.boundary);
    eg.push_back(row.errors.gradient);
  }
  if (spec.resolutions.size() >= 2) {
    result.solution_order = fitted_order(spec.resolutions, es);
    result.boundary_order = fitted_order(spec.resolutions, eb);
    result.gradient_order = fitted_order(spec.resolutions, eg);
  }
  return result;
}

TruncationResult run_truncation(const RunSpec& spec) {
  validate(spec);
  TruncationResult result;
  std::vector<double> ea, ei;
  for (int nx : spec.resolutions) {
    const Problem problem = make_problem(spec, nx);
    const ImmersedOperator& op = problem.op;
    std::vector<double> out(op.grid().size());
    op.apply(problem.exact, problem.data, out);
    TruncationRow row;
    row.nx = nx;
    for (std::size_t p : op.unknowns()) {
      const double e = std::abs(out[p] - problem.forcing[p]);
      if (op.mask()[p] == PointClass::Affected) {
        row.affected = std::max(row.affected, e);
      } else {
        row.interior = std::max(row.interior, e);
      }
    }
    result.rows.push_back(row);
    ea.push_back(row.affected);
    ei.push_back(row.interior);
  }
  if (spec.resolutions.size() >= 2) {
    result.affected_order = fitted_order(spec.resolutions, ea);
    result.interior_order = fitted_order(spec.resolutions, ei);
  }
  return result;
}

IterationsResult run_iterations(const RunSpec& spec) {
  validate(spec);
  IterationsResult result;
  for (int nx : spec.resolutions) {
    const Problem problem = make_problem(spec, nx);
    for (const auto& name : spec.preconditioners) {
      const Preconditioner pre = make_preconditioner(problem, name, spec);
      const SolveOutcome out = solve_problem(problem, pre, spec);
      result.rows.push_back({nx, name, out.report.iterations, out.report.converged()});
    }
  }
  return result;
}

MgrateRow mgrate_entry(const RunSpec& spec, int nx) {
  const Grid2D grid = Grid2D::unit_square(nx);
  SWConfig config = sw_config(operator_config(spec));
  SWOperator sw(grid, make_geometry(spec.geometry, spec.geometry_params), config);
  MGOptions options;
  options.kind = spec.cycle;
  options.prolongation = spec.prolongation;
  const MGHierarchy h = build_hierarchy(sw, options);
  const ManufacturedCase mc = manufactured_case(spec.solution_name());
  // Same forcing, homogeneous data: the divided system is lap u = f / beta.
  std::vector<double> f(grid.size(), 0.0), u(grid.size(), 0.0);
  for (std::size_t p : sw.unknowns()) f[p] = mc.laplacian(grid.position(p), sw.side(p));
  if (sw.singular()) {
    // Remove the part of f outside the range so the iteration can converge.
    const std::size_t n = sw.unknowns().size();
    ExactInverse inv(sw.matrix(), true, std::vector<double>(n, 1.0));
    std::vector<double> b(n + 1, 0.0), x(n + 1);
    for (std::size_t r = 0; r < n; ++r) b[r] = f[sw.unknowns()[r]];
    inv.apply(b, x);
    for (std::size_t p : sw.unknowns()) f[p] -= x[n];
  }
  MgrateRow row;
  row.nx = nx;
  row.report = h.iterate(u, f, spec.mg_iterations);
  row.mean_rate = row.report.geometric_mean(2, static_cast<std::size_t>(spec.mg_iterations));
  return row;
}

MgrateResult run_mgrate(const RunSpec& spec) {
  validate(spec);
  MgrateResult result;
  for (int nx : spec.resolutions) result.rows.push_back(mgrate_entry(spec, nx));
  return result;
}

SpectrumStudy run_spectrum(const RunSpec& spec) {
  validate(spec);
  SpectrumStudy result;
  for (int nx : spec.resolutions) {
    const ImmersedOperator op(Grid2D::unit_square(nx), make_geometry(spec.geometry, spec.geometry_params),
                              operator_config(spec));
    result.rows.push_back({nx, extremal_spectrum(op, spec.krylov_dim)});
  }
  return result;
}

SolveStudy run_solve(const RunSpec& spec) {
  validate(spec);
  SolveStudy result;
  for (int nx : spec.resolutions) {
    const Problem problem = make_problem(spec, nx);
    const Preconditioner pre = make_preconditioner(problem, spec.preconditioners.front(), spec);
    const SolveOutcome out = solve_problem(problem, pre, spec);
    SolveRow row;
    row.nx = nx;
    row.report = out.report;
    row.solution_error = measure_errors(problem, out.u).solution;
    std::vector<double> lu(problem.op.grid().size());
    problem.op.apply(out.u, problem.data, lu);
    double rmax = 0.0, fmax = 0.0;
    for (std::size_t r = 0; r < problem.rhs.size(); ++r) {
      const std::size_t p = problem.op.unknowns()[r];
      // Bordered solves satisfy L u + alpha = rhs.
      rmax = std::max(rmax, std::abs(problem.forcing[p] - lu[p] - out.report.alpha));
      fmax = std::max(fmax, std::abs(problem.rhs[r]));
    }
    row.residual = fmax > 0.0 ? rmax / fmax : rmax;
    if (!spec.dump.empty()) {
      row.dump_path = spec.dump + "." + std::to_string(nx) + ".fld";
      write_field(row.dump_path, nx, nx, out.u);
    }
    result.rows.push_back(row);
  }
  return result;
}

CsvTable to_table(const ConvergeResult& r) {
  CsvTable t;
  t.header = {"nx", "solution_error", "boundary_error", "gradient_error", "iterations", "converged"};
  for (const auto& row : r.rows)
    t.rows.push_back({std::to_string(row.nx), fmt(row.errors.solution), fmt(row.errors.boundary),
                      fmt(row.errors.gradient), std::to_string(row.iterations), row.converged ? "1" : "0"});
  if (r.rows.size() >= 2)
    t.rows.push_back({"slope", fmt(r.solution_order), fmt(r.boundary_order), fmt(r.gradient_order), "", ""});
  return t;
}

CsvTable to_table(const TruncationResult& r) {
  CsvTable t;
  t.header = {"nx", "affected_truncation", "interior_truncation"};
  for (const auto& row : r.rows) t.rows.push_back({std::to_string(row.nx), fmt(row.affected), fmt(row.interior)});
  if (r.rows.size() >= 2) t.rows.push_back({"slope", fmt(r.affected_order), fmt(r.interior_order)});
  return t;
}

CsvTable to_table(const IterationsResult& r) {
  CsvTable t;
  t.header = {"nx", "preconditioner", "iterations", "converged"};
  for (const auto& row : r.rows)
    t.rows.push_back({std::to_string(row.nx), row.preconditioner, std::to_string(row.iterations),
                      row.converged ? "1" : "0"});
  return t;
}

CsvTable to_table(const MgrateResult& r) {
  CsvTable t;
  t.header = {"nx", "iteration", "residual", "rho"};
  for (const auto& row : r.rows) {
    const auto& res = row.report.residuals;
    for (std::size_t i = 0; i < res.size(); ++i)
      t.rows.push_back({std::to_string(row.nx), std::to_string(i), fmt(res[i]),
                        i == 0 || i > row.report.factors.size() ? "" : fmt(row.report.factors[i - 1])});
    t.rows.push_back({std::to_string(row.nx), "mean", "", fmt(row.mean_rate)});
  }
  return t;
}

CsvTable to_table(const SpectrumStudy& r) {
  CsvTable t;
  t.header = {"nx", "re", "im"};
  for (const auto& row : r.rows)
    for (const auto& z : row.spectrum.ritz) t.rows.push_back({std::to_string(row.nx), fmt(z.real()), fmt(z.imag())});
  return t;
}

CsvTable to_table(const SolveStudy& r) {
  CsvTable t;
  t.header = {"nx", "iterations", "status", "alpha", "relative_residual", "solution_error", "dump"};
  for (const auto& row : r.rows)
    t.rows.push_back({std::to_string(row.nx), std::to_string(row.report.iterations),
                      std::string(to_string(row.report.status)), fmt(row.report.alpha), fmt(row.residual),
                      fmt(row.solution_error), row.dump_path});
  return t;
}

std::string format_csv(const CsvTable& table, const RunSpec& spec) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) line(row);
  out += "# runspec: " + describe(spec) + "\n";
  return out;
}

namespace {

void put_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

constexpr char kMagic[8] = {'I', 'I', 'M', 'F', 'L', 'D', '0', '1'};

}  // namespace

void write_field(const std::string& path, int nx, int ny, std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
    throw Error(ErrorCode::InvalidArgument, "field size does not match nx * ny");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(kMagic, 8);
  put_u64(out, static_cast<std::uint64_t>(nx));
  put_u64(out, static_cast<std::uint64_t>(ny));
  for (double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

FieldDump read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || !std::equal(magic, magic + 8, kMagic)) throw Error(ErrorCode::Io, path + " is not a field dump");
  FieldDump d;
  d.nx = get_u64(in);
  d.ny = get_u64(in);
  d.values.resize(d.nx * d.ny);
  for (double& v : d.values) v = std::bit_cast<double>(get_u64(in));
  if (!in) throw Error(ErrorCode::Io, path + " is truncated");
  return d;
}

}  // namespace iim

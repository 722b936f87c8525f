// SPDX-License-Identifier: Apache-2.0
// Command-line driver for the 2D studies. Writes CSV to --out (or stdout)
// and a short summary to stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "iim/error.hpp"
#include "iim/harness.hpp"

namespace {

struct Overrides {
  std::string run_file;
  std::string nx, bc, cycle, out, preconditioner, solver, side, prolongation;
  std::optional<int> order, border, max_iterations, restart, mg_iterations, krylov_dim;
  std::optional<double> beta_plus, beta_minus, tolerance, gamma;
  std::string dump;
  std::vector<std::string> sets;
};

void apply(iim::RunSpec& spec, const Overrides& o) {
  auto set = [&](const char* key, const std::string& v) {
    if (!v.empty()) iim::set_option(spec, key, v);
  };
  set("nx", o.nx);
  set("bc", o.bc);
  set("cycle", o.cycle);
  set("out", o.out);
  set("preconditioner", o.preconditioner);
  set("solver", o.solver);
  set("side", o.side);
  set("prolongation", o.prolongation);
  set("dump", o.dump);
  if (o.order) spec.order = *o.order;
  if (o.border) spec.boundary_order = *o.border;
  if (o.max_iterations) spec.max_iterations = *o.max_iterations;
  if (o.restart) spec.restart = *o.restart;
  if (o.mg_iterations) spec.mg_iterations = *o.mg_iterations;
  if (o.krylov_dim) spec.krylov_dim = *o.krylov_dim;
  if (o.beta_plus) spec.beta_plus = *o.beta_plus;
  if (o.beta_minus) spec.beta_minus = *o.beta_minus;
  if (o.tolerance) spec.tolerance = *o.tolerance;
  if (o.gamma) spec.gamma = *o.gamma;
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw iim::Error(iim::ErrorCode::InvalidArgument, "--set expects key=value");
    iim::set_option(spec, kv.substr(0, eq), kv.substr(eq + 1));
  }
}

void summarize(const iim::ConvergeResult& r) {
  for (const auto& row : r.rows)
    std::fprintf(stderr, "nx %4d  |e_u| %.3e  |e_b| %.3e  |e_grad| %.3e  iterations %d%s\n", row.nx,
                 row.errors.solution, row.errors.boundary, row.errors.gradient, row.iterations,
                 row.converged ? "" : " (not converged)");
  if (r.rows.size() >= 2)
    std::fprintf(stderr, "orders: solution %.2f  boundary %.2f  gradient %.2f\n", r.solution_order,
                 r.boundary_order, r.gradient_order);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Immersed interface Poisson solver studies"};
  std::string study;
  Overrides o;
  app.add_option("study", study, "converge | truncation | iterations | mgrate | spectrum | solve")->required();
  app.add_option("--run-file", o.run_file, "key = value run file");
  app.add_option("--nx", o.nx, "comma-separated resolutions, each 8 * 2^L");
  app.add_option("--order", o.order, "interior order n (2, 4, 6)");
  app.add_option("--border", o.border, "boundary interpolant order k (3..8)");
  app.add_option("--bc", o.bc, "dirichlet | neumann | jump");
  app.add_option("--beta-plus", o.beta_plus, "coefficient on the plus side");
  app.add_option("--beta-minus", o.beta_minus, "coefficient on the minus side");
  app.add_option("--cycle", o.cycle, "v | w");
  app.add_option("--out", o.out, "CSV output path (stdout when omitted)");
  app.add_option("--preconditioner", o.preconditioner, "none, mg, sw, iimNK; comma list for iterations");
  app.add_option("--solver", o.solver, "gmres | fgmres");
  app.add_option("--side", o.side, "left | right");
  app.add_option("--prolongation", o.prolongation, "domain | bilinear");
  app.add_option("--tolerance", o.tolerance, "outer relative tolerance (default 1e-6/nx)");
  app.add_option("--max-iterations", o.max_iterations, "iteration cap");
  app.add_option("--restart", o.restart, "restart length");
  app.add_option("--mg-iterations", o.mg_iterations, "cycles for the mgrate study");
  app.add_option("--krylov-dim", o.krylov_dim, "Arnoldi dimension for the spectrum study");
  app.add_option("--gamma", o.gamma, "prescribed sum of the solution for singular problems");
  app.add_option("--dump", o.dump, "field dump prefix for the solve study");
  app.add_option("--set", o.sets, "extra key=value overrides");
  CLI11_PARSE(app, argc, argv);

  iim::RunSpec spec;
  bool all_converged = true;
  try {
    if (!o.run_file.empty()) spec = iim::load_run_file(o.run_file);
    spec.study = iim::parse_study(study);
    apply(spec, o);
    iim::validate(spec);
  } catch (const iim::Error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  }

  iim::CsvTable table;
  try {
    switch (spec.study) {
      case iim::StudyKind::Converge: {
        const auto r = iim::run_converge(spec);
        summarize(r);
        for (const auto& row : r.rows) all_converged = all_converged && row.converged;
        table = iim::to_table(r);
        break;
      }
      case iim::StudyKind::Truncation: {
        const auto r = iim::run_truncation(spec);
        if (r.rows.size() >= 2)
          std::fprintf(stderr, "orders: affected %.2f  interior %.2f\n", r.affected_order, r.interior_order);
        table = iim::to_table(r);
        break;
      }
      case iim::StudyKind::Iterations: {
        const auto r = iim::run_iterations(spec);
        for (const auto& row : r.rows) {
          std::fprintf(stderr, "nx %4d  %-6s %4d%s\n", row.nx, row.preconditioner.c_str(), row.iterations,
                       row.converged ? "" : " (not converged)");
          all_converged = all_converged && row.converged;
        }
        table = iim::to_table(r);
        break;
      }
      case iim::StudyKind::Mgrate: {
        const auto r = iim::run_mgrate(spec);
        for (const auto& row : r.rows) std::fprintf(stderr, "nx %4d  mean rho %.3f\n", row.nx, row.mean_rate);
        table = iim::to_table(r);
        break;
      }
      case iim::StudyKind::Spectrum: {
        const auto r = iim::run_spectrum(spec);
        for (const auto& row : r.rows)
          std::fprintf(stderr, "nx %4d  %d Ritz values  min Re %.4f  max Re %.3e\n", row.nx,
                       row.spectrum.dimension, row.spectrum.min_real(), row.spectrum.max_real());
        table = iim::to_table(r);
        break;
      }
      case iim::StudyKind::Solve: {
        const auto r = iim::run_solve(spec);
        for (const auto& row : r.rows) {
          std::fprintf(stderr, "nx %4d  %s after %d iterations  |e_u| %.3e\n", row.nx,
                       std::string(iim::to_string(row.report.status)).c_str(), row.report.iterations,
                       row.solution_error);
          all_converged = all_converged && row.report.converged();
        }
        table = iim::to_table(r);
        break;
      }
    }
  } catch (const iim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == iim::ErrorCode::InvalidArgument ? 1 : 2;
  }

  const std::string csv = iim::format_csv(table, spec);
  if (spec.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(spec.out);
    if (!out) {
      std::cerr << "cannot write " << spec.out << "\n";
      return 1;
    }
    out << csv;
  }
  return all_converged ? 0 : 2;
}

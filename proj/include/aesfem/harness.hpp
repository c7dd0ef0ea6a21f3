// SPDX-License-Identifier: Apache-2.0
#pragma once

// Experiment driver: solves one (method, mesh, problem) case end to end,
// measures errors and timings, and runs convergence studies and
// element-quality sweeps.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "aesfem/assembly.hpp"
#include "aesfem/linalg/condest.hpp"
#include "aesfem/linalg/krylov.hpp"
#include "aesfem/linalg/preconditioners.hpp"
#include "aesfem/mesh.hpp"
#include "aesfem/mesh_io.hpp"
#include "aesfem/problem.hpp"
#include "aesfem/quadrature.hpp"

namespace aesfem {

enum class Method { Fem, AesFem1, AesFem2, Gfd };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::Fem: return "fem";
    case Method::AesFem1: return "aesfem1";
    case Method::AesFem2: return "aesfem2";
    default: return "gfd";
  }
}

inline Method parse_method(const std::string& s) {
  for (auto m : {Method::Fem, Method::AesFem1, Method::AesFem2, Method::Gfd}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown method '" + s + "' (expected fem, aesfem1, aesfem2 or gfd)");
}

enum class SolverKind { Cg, Gmres };
enum class PrecondKind { None, Ilu, GaussSeidel, IncompleteCholesky };

inline std::string to_string(PrecondKind p) {
  switch (p) {
    case PrecondKind::Ilu: return "ilu";
    case PrecondKind::GaussSeidel: return "gs";
    case PrecondKind::IncompleteCholesky: return "ic";
    default: return "none";
  }
}

inline PrecondKind parse_precond(const std::string& s) {
  for (auto p : {PrecondKind::None, PrecondKind::Ilu, PrecondKind::GaussSeidel, PrecondKind::IncompleteCholesky}) {
    if (to_string(p) == s) return p;
  }
  throw std::invalid_argument("unknown preconditioner '" + s + "' (expected ilu, gs, ic or none)");
}

struct SolverConfig {
  SolverKind solver = SolverKind::Gmres;
  PrecondKind precond = PrecondKind::Ilu;
  double tol = 1e-8;
  double droptol = 1e-3;
  int max_iter = 1000;
  int restart = 0;
  bool condest = false;
};

enum class Experiment { Accuracy, QualitySweep };

/// Accuracy runs: GMRES + ILU (drop 1e-3 in 2D, 1e-1 in 3D), tol 1e-8.
/// Quality sweeps: CG for FEM, GMRES otherwise; IC/ILU with drop 1e-3 and
/// tol 1e-8 in 2D, Gauss-Seidel with tol 1e-5 in 3D.
inline SolverConfig default_solver(Method method, int dim, Experiment exp = Experiment::Accuracy) {
  SolverConfig c;
  if (exp == Experiment::Accuracy) {
    c.droptol = dim == 2 ? 1e-3 : 1e-1;
    return c;
  }
  c.condest = true;
  const bool fem = method == Method::Fem;
  c.solver = fem ? SolverKind::Cg : SolverKind::Gmres;
  if (dim == 2) {
    c.precond = fem ? PrecondKind::IncompleteCholesky : PrecondKind::Ilu;
  } else {
    c.precond = PrecondKind::GaussSeidel;
    c.tol = 1e-5;
  }
  return c;
}

struct Timings {
  double init = 0.0;
  double assembly = 0.0;
  double precond = 0.0;
  double solve = 0.0;
};

struct RunReport {
  Method method = Method::Fem;
  int dim = 2;
  PdeKind pde = PdeKind::Poisson;
  SolutionId solution = SolutionId::U1;
  std::size_t nodes = 0;
  std::size_t elements = 0;
  mesh::QualityReport quality;
  double l2_error = 0.0;
  double linf_error = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stagnated = false;
  double relative_residual = 0.0;
  std::optional<double> condest;
  Timings timings;
  AssemblyStats assembly;
  std::size_t matrix_nnz = 0;
  std::string failure;  // nonempty when the solve could not run
};

struct ErrorNorms {
  double l2 = 0.0;
  double linf = 0.0;
};

/// L-infinity at the nodes; L2 of the piecewise-linear interpolant of the
/// nodal error, integrated with the degree-2 load rule.
inline ErrorNorms error_norms(const mesh::MeshTopology& m, std::span<const double> u_nodal, const ProblemCase& problem) {
  std::vector<double> err(m.num_nodes());
  ErrorNorms out;
  for (std::size_t v = 0; v < err.size(); ++v) {
    err[v] = u_nodal[v] - problem.u(m.coord(static_cast<mesh::NodeId>(v)));
    if (m.is_referenced(static_cast<mesh::NodeId>(v))) out.linf = std::max(out.linf, std::abs(err[v]));
  }
  const auto rule = quad::quadrature_rule(m.dim(), quad::Purpose::Load);
  double sum = 0.0;
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    const auto el = m.element(static_cast<mesh::ElemId>(e));
    const double scale = m.measure(static_cast<mesh::ElemId>(e)) / quad::reference_measure(m.dim());
    for (std::size_t q = 0; q < rule.size(); ++q) {
      double eq = 0.0;
      for (int a = 0; a <= m.dim(); ++a) eq += rule.points[q][a] * err[el[a]];
      sum += rule.weights[q] * scale * eq * eq;
    }
  }
  out.l2 = std::sqrt(sum);
  return out;
}

/// -log2(e_first / e_last) / log2((N_first / N_last)^(1/d)); +inf when any
/// error is zero.
inline double convergence_rate(std::span<const double> errors, std::span<const std::size_t> nodes, int dim) {
  if (errors.size() < 2 || errors.size() != nodes.size()) throw std::invalid_argument("convergence rate needs at least two levels");
  for (double e : errors) {
    if (!(e > 0.0)) return std::numeric_limits<double>::infinity();
  }
  const double num = -std::log2(errors.front() / errors.back());
  const double den = std::log2(std::pow(static_cast<double>(nodes.front()) / static_cast<double>(nodes.back()), 1.0 / dim));
  return num / den;
}

using MeshSource = std::function<mesh::MeshTopology()>;

inline MeshSource mesh_from_file(std::string base) {
  return [base = std::move(base)] { return mesh::load_mesh(base); };
}
inline MeshSource structured_mesh(int n, int dim) {
  return [=] { return mesh::generate_structured_mesh(n, dim); };
}
inline MeshSource given_mesh(std::shared_ptr<const mesh::MeshTopology> m) {
  return [m = std::move(m)] { return *m; };
}

namespace detail {
inline double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace detail

inline LinearSystem assemble(Method method, const mesh::MeshTopology& m, const ProblemCase& problem, const AssemblyOptions& opt = {}) {
  switch (method) {
    case Method::Fem: return assemble_linear_fem(m, problem, opt);
    case Method::AesFem1: return assemble_aes_fem(m, problem, LoadMode::AesFem1, opt);
    case Method::AesFem2: return assemble_aes_fem(m, problem, LoadMode::AesFem2, opt);
    default: return assemble_gfd(m, problem, opt);
  }
}

inline std::unique_ptr<linalg::Preconditioner> make_preconditioner(const linalg::SparseRowMatrix& a, const SolverConfig& cfg) {
  switch (cfg.precond) {
    case PrecondKind::Ilu: return linalg::ilu(a, cfg.droptol);
    case PrecondKind::GaussSeidel: return linalg::gauss_seidel_preconditioner(a);
    case PrecondKind::IncompleteCholesky: return linalg::incomplete_cholesky(a, cfg.droptol);
    default: return std::make_unique<linalg::IdentityPreconditioner>();
  }
}

struct SolveOutcome {
  std::vector<double> x;
  linalg::SolveReport report;
};

/// Preconditioner construction and Krylov solve; times both.
inline SolveOutcome solve_system(const LinearSystem& sys, const SolverConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  const auto m = make_preconditioner(sys.matrix, cfg);
  const double tp = detail::elapsed(t0);
  linalg::KrylovOptions opt;
  opt.tol = cfg.tol;
  opt.max_iter = cfg.max_iter;
  opt.restart = cfg.restart;
  t0 = std::chrono::steady_clock::now();
  auto res = cfg.solver == SolverKind::Cg ? linalg::cg(sys.matrix, sys.rhs, *m, opt) : linalg::gmres(sys.matrix, sys.rhs, *m, opt);
  res.report.solve_seconds = detail::elapsed(t0);
  res.report.precond_seconds = tp;
  return {std::move(res.x), res.report};
}

/// Mesh -> problem setup -> assembly -> preconditioner -> solve -> errors.
/// Numerical failures are recorded in `failure`, not thrown.
inline RunReport run_case(Method method, const MeshSource& source, SolutionId solution, PdeSpec pde, const SolverConfig& cfg,
                          const AssemblyOptions& opt = {}) {
  RunReport r;
  r.method = method;
  r.pde = pde.kind;
  r.solution = solution;
  auto t0 = std::chrono::steady_clock::now();
  const mesh::MeshTopology m = source();
  const ProblemCase problem = analytic_solution(solution, m.dim(), pde);
  (void)m.boundary_flags();
  r.timings.init = detail::elapsed(t0);
  r.dim = m.dim();
  r.nodes = m.num_nodes();
  r.elements = m.num_elements();
  r.quality = mesh::mesh_quality(m);

  t0 = std::chrono::steady_clock::now();
  const LinearSystem sys = assemble(method, m, problem, opt);
  r.timings.assembly = detail::elapsed(t0);
  r.assembly = sys.stats;
  r.matrix_nnz = sys.matrix.nnz();

  if (cfg.condest) r.condest = linalg::condest_1norm(sys.matrix);
  try {
    const auto out = solve_system(sys, cfg);
    r.timings.precond = out.report.precond_seconds;
    r.timings.solve = out.report.solve_seconds;
    r.iterations = out.report.iterations;
    r.converged = out.report.converged;
    r.stagnated = out.report.stagnated;
    r.relative_residual = out.report.relative_residual;
    const auto u = expand_solution(sys, out.x);
    const auto e = error_norms(m, u, problem);
    r.l2_error = e.l2;
    r.linf_error = e.linf;
  } catch (const linalg::LinalgError& ex) {
    r.failure = ex.what();
    r.l2_error = r.linf_error = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

struct ConvergenceStudy {
  std::vector<RunReport> levels;
  double l2_rate = 0.0;
  double linf_rate = 0.0;
};

inline ConvergenceStudy convergence_study(Method method, std::span<const MeshSource> sources, SolutionId solution, PdeSpec pde, const SolverConfig& cfg,
                                          const AssemblyOptions& opt = {}) {
  ConvergenceStudy s;
  std::vector<double> l2, linf;
  std::vector<std::size_t> nodes;
  for (const auto& src : sources) {
    s.levels.push_back(run_case(method, src, solution, pde, cfg, opt));
    l2.push_back(s.levels.back().l2_error);
    linf.push_back(s.levels.back().linf_error);
    nodes.push_back(s.levels.back().nodes);
  }
  if (s.levels.size() >= 2) {
    const int dim = s.levels.front().dim;
    s.l2_rate = convergence_rate(l2, nodes, dim);
    s.linf_rate = convergence_rate(linf, nodes, dim);
  }
  return s;
}

struct SweepPoint {
  double fraction = 0.0;
  mesh::QualityReport quality;
  std::vector<RunReport> runs;  // one per requested method
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::string stopped_reason;  // nonempty when degradation failed part way
};

/// Degrades `base` through increasing fractions and runs every method on
/// each mesh. `solver_for` picks the solver per method; condest is always
/// computed.
inline SweepResult quality_sweep(const mesh::MeshTopology& base, std::span<const mesh::ElemId> targets, std::span<const double> fractions,
                                 std::span<const Method> methods, SolutionId solution, PdeSpec pde,
                                 const std::function<SolverConfig(Method)>& solver_for, const AssemblyOptions& opt = {}) {
  for (std::size_t k = 1; k < fractions.size(); ++k) {
    if (!(fractions[k] > fractions[k - 1])) throw std::invalid_argument("sweep fractions must be strictly increasing");
  }
  SweepResult out;
  for (double f : fractions) {
    std::shared_ptr<const mesh::MeshTopology> m;
    try {
      m = std::make_shared<const mesh::MeshTopology>(mesh::degrade_mesh(base, targets, f));
    } catch (const mesh::MeshError& ex) {
      out.stopped_reason = ex.what();
      break;
    }
    SweepPoint p;
    p.fraction = f;
    p.quality = mesh::mesh_quality(*m);
    for (Method method : methods) {
      auto cfg = solver_for(method);
      cfg.condest = true;
      p.runs.push_back(run_case(method, given_mesh(m), solution, pde, cfg, opt));
    }
    out.points.push_back(std::move(p));
  }
  return out;
}

// CSV output.

inline const char* kCsvHeader =
    "method,dim,pde,solution,nodes,elements,min_angle_deg,cot_min_angle,l2_error,linf_error,iterations,condest,t_init_s,t_assembly_s,t_precond_s,t_solve_s";

namespace detail {
inline std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}
}  // namespace detail

inline std::string csv_row(const RunReport& r) {
  std::ostringstream s;
  s << to_string(r.method) << ',' << r.dim << ',' << to_string(r.pde) << ',' << to_string(r.solution) << ',' << r.nodes << ',' << r.elements << ','
    << detail::fmt(r.quality.min_angle) << ',' << detail::fmt(r.quality.cot_min_angle()) << ',' << detail::fmt(r.l2_error) << ','
    << detail::fmt(r.linf_error) << ',' << r.iterations << ',' << (r.condest ? detail::fmt(*r.condest) : std::string()) << ','
    << detail::fmt(r.timings.init) << ',' << detail::fmt(r.timings.assembly) << ',' << detail::fmt(r.timings.precond) << ','
    << detail::fmt(r.timings.solve);
  return s.str();
}

inline void write_csv(std::ostream& os, std::span<const RunReport> reports) {
  os << kCsvHeader << '\n';
  for (const auto& r : reports) os << csv_row(r) << '\n';
}

}  // namespace aesfem

// SPDX-License-Identifier: Apache-2.0
// Command-line driver: solve, convergence, quality-sweep, gen-mesh, mesh-info.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aesfem/aesfem.hpp"

namespace {

using namespace aesfem;
using json = nlohmann::json;

struct Common {
  std::string method = "aesfem2";
  int load_mode = 0;  // 0: taken from the method name
  std::string pde = "poisson";
  std::string solution = "u1";
  int dim = 2;
  int degree = 2;
  double weight_eps = 0.01;
  double rank_eps = 1e-4;
  std::optional<double> tol;
  std::optional<double> droptol;
  std::string precond = "auto";
  std::string solver = "auto";
  int max_iter = 1000;
  int restart = 0;
  bool condest = false;
  bool high_order_load = false;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool with_method) {
  if (with_method) {
    app->add_option("--method", c.method, "fem, aesfem1, aesfem2, gfd (or aesfem with --load-mode)")
        ->check(CLI::IsMember({"fem", "aesfem", "aesfem1", "aesfem2", "gfd"}));
    app->add_option("--load-mode", c.load_mode, "AES-FEM load vector variant")->check(CLI::IsMember({1, 2}));
  }
  app->add_option("--pde", c.pde)->check(CLI::IsMember({"poisson", "convdiff"}));
  app->add_option("--solution", c.solution)->check(CLI::IsMember({"u1", "u2", "u3", "quadratic", "linear", "zero"}));
  app->add_option("--dim", c.dim)->check(CLI::IsMember({2, 3}));
  app->add_option("--degree", c.degree, "WLS polynomial degree")->check(CLI::PositiveNumber);
  app->add_option("--weight-eps", c.weight_eps, "row weight regularizer")->check(CLI::PositiveNumber);
  app->add_option("--rank-eps", c.rank_eps, "rank tolerance")->check(CLI::PositiveNumber);
  app->add_option("--tol", c.tol, "solver relative tolerance")->check(CLI::PositiveNumber);
  app->add_option("--droptol", c.droptol, "ILU / IC drop tolerance")->check(CLI::NonNegativeNumber);
  app->add_option("--precond", c.precond)->check(CLI::IsMember({"auto", "ilu", "gs", "ic", "none"}));
  app->add_option("--solver", c.solver)->check(CLI::IsMember({"auto", "cg", "gmres"}));
  app->add_option("--max-iter", c.max_iter)->check(CLI::PositiveNumber);
  app->add_option("--restart", c.restart, "GMRES restart length, 0 for none")->check(CLI::NonNegativeNumber);
  app->add_flag("--condest", c.condest, "estimate the 1-norm condition number");
  app->add_flag("--high-order-load", c.high_order_load, "use a higher-order rule for load and convection terms");
  app->add_option("--out", c.out, "output file (default stdout)");
}

Method resolve_method(const std::string& name, int load_mode) {
  if (name == "aesfem") return load_mode == 1 ? Method::AesFem1 : Method::AesFem2;
  const Method m = parse_method(name);
  if (load_mode != 0 && (m == Method::AesFem1 || m == Method::AesFem2)) return load_mode == 1 ? Method::AesFem1 : Method::AesFem2;
  return m;
}

SolverConfig solver_config(const Common& c, Method m, int dim, Experiment exp) {
  SolverConfig s = default_solver(m, dim, exp);
  if (c.tol) s.tol = *c.tol;
  if (c.droptol) s.droptol = *c.droptol;
  if (c.precond != "auto") s.precond = parse_precond(c.precond);
  if (c.solver != "auto") s.solver = c.solver == "cg" ? SolverKind::Cg : SolverKind::Gmres;
  s.max_iter = c.max_iter;
  s.restart = c.restart;
  s.condest = s.condest || c.condest;
  return s;
}

AssemblyOptions assembly_options(const Common& c) {
  AssemblyOptions o;
  o.wls.degree = c.degree;
  o.wls.weight_eps = c.weight_eps;
  o.wls.rank_eps = c.rank_eps;
  o.high_order_load = c.high_order_load;
  return o;
}

PdeSpec pde_spec(const Common& c) {
  PdeSpec p;
  p.kind = parse_pde(c.pde);
  return p;
}

/// Output stream that is either a file or stdout.
class Sink {
public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      if (auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot open output file " + path);
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

private:
  std::unique_ptr<std::ofstream> file_;
};

json report_json(const RunReport& r) {
  json j;
  j["method"] = to_string(r.method);
  j["dim"] = r.dim;
  j["pde"] = to_string(r.pde);
  j["solution"] = to_string(r.solution);
  j["nodes"] = r.nodes;
  j["elements"] = r.elements;
  j["min_angle_deg"] = r.quality.min_angle;
  j["max_angle_deg"] = r.quality.max_angle;
  j["max_aspect_ratio"] = r.quality.max_aspect_ratio;
  j["cot_min_angle"] = r.quality.cot_min_angle();
  j["l2_error"] = r.l2_error;
  j["linf_error"] = r.linf_error;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["stagnated"] = r.stagnated;
  j["relative_residual"] = r.relative_residual;
  j["condest"] = r.condest ? json(*r.condest) : json(nullptr);
  j["timings"] = {{"init_s", r.timings.init}, {"assembly_s", r.timings.assembly}, {"precond_s", r.timings.precond}, {"solve_s", r.timings.solve}};
  j["matrix_nnz"] = r.matrix_nnz;
  j["diff_wls_calls"] = r.assembly.diff_wls_calls;
  j["extended_stencils"] = r.assembly.extended_stencils;
  j["rank_deficient_stencils"] = r.assembly.rank_deficient_stencils;
  if (!r.failure.empty()) j["failure"] = r.failure;
  return j;
}

bool ok(const RunReport& r) { return r.failure.empty() && r.converged; }

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(parse_method(n));
  return out;
}

// "unstructured" targets n^2 nodes so --n keeps its meaning across kinds.
mesh::MeshTopology generate_mesh(const std::string& kind, int n, int dim, double jitter) {
  if (kind == "unstructured") {
    if (dim != 2) throw std::invalid_argument("unstructured meshes are generated in 2D only");
    auto m = mesh::generate_unstructured_mesh(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    return jitter > 0.0 ? mesh::jitter_mesh(m, jitter) : m;
  }
  auto m = mesh::generate_structured_mesh(n, dim);
  return jitter > 0.0 ? mesh::jitter_mesh(m, jitter) : m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AES-FEM, linear FEM and GFD solvers for Poisson and convection-diffusion problems"};
  app.require_subcommand(1);

  // solve
  Common solve_opt;
  std::string solve_mesh, format = "csv";
  int solve_n = 33;
  double solve_jitter = 0.0;
  auto* solve = app.add_subcommand("solve", "solve one problem with one method");
  add_common(solve, solve_opt, true);
  solve->add_option("--mesh", solve_mesh, "mesh base path (reads <base>.node and <base>.ele)");
  solve->add_option("--n", solve_n, "nodes per side of a generated structured mesh when --mesh is absent")->check(CLI::Range(2, 100000));
  solve->add_option("--jitter", solve_jitter, "perturb interior nodes of the generated mesh")->check(CLI::Range(0.0, 0.45));
  std::string solve_kind = "structured";
  solve->add_option("--kind", solve_kind, "generated mesh kind")->check(CLI::IsMember({"structured", "unstructured"}));
  solve->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));

  // convergence
  Common conv_opt;
  std::vector<std::string> conv_methods{"fem", "aesfem1", "aesfem2", "gfd"};
  std::vector<std::string> conv_meshes;
  std::vector<int> conv_levels;
  double conv_jitter = 0.0;
  auto* conv = app.add_subcommand("convergence", "errors and convergence rates over a mesh series");
  add_common(conv, conv_opt, false);
  conv->add_option("--methods", conv_methods)->check(CLI::IsMember({"fem", "aesfem1", "aesfem2", "gfd"}));
  conv->add_option("--meshes", conv_meshes, "mesh base paths, coarse to fine");
  conv->add_option("--levels", conv_levels, "nodes per side for generated meshes (default 16 32 64 128 in 2D, 8 16 32 in 3D)");
  conv->add_option("--jitter", conv_jitter)->check(CLI::Range(0.0, 0.45));
  std::string conv_kind = "structured";
  conv->add_option("--kind", conv_kind, "generated mesh kind")->check(CLI::IsMember({"structured", "unstructured"}));

  // quality-sweep
  Common sweep_opt;
  sweep_opt.solution = "u1";
  std::string sweep_mesh;
  int sweep_n = 0;
  double sweep_jitter = -1.0;
  std::string sweep_kind;
  std::vector<int> sweep_targets;
  std::size_t sweep_num_targets = 6;
  std::vector<double> fractions{0.0, 0.9, 0.99, 0.999, 0.9999, 0.99999};
  std::vector<std::string> sweep_methods{"fem", "aesfem1", "aesfem2", "gfd"};
  auto* sweep = app.add_subcommand("quality-sweep", "condition numbers, iterations and errors on progressively degraded meshes");
  add_common(sweep, sweep_opt, false);
  sweep->add_option("--mesh", sweep_mesh, "base mesh path");
  sweep->add_option("--n", sweep_n, "nodes per side of the generated base mesh (default 256 in 2D, 24 in 3D)");
  sweep->add_option("--jitter", sweep_jitter, "jitter of the generated base mesh (default 0 unstructured, 0.2 structured)")->check(CLI::Range(0.0, 0.45));
  sweep->add_option("--kind", sweep_kind, "generated base mesh kind (default unstructured in 2D, structured in 3D)")->check(CLI::IsMember({"structured", "unstructured"}));
  sweep->add_option("--targets", sweep_targets, "element ids to degrade");
  sweep->add_option("--num-targets", sweep_num_targets, "number of automatically chosen targets when --targets is absent");
  sweep->add_option("--fractions", fractions, "strictly increasing fractions in [0,1)");
  sweep->add_option("--methods", sweep_methods)->check(CLI::IsMember({"fem", "aesfem1", "aesfem2", "gfd"}));

  // gen-mesh
  int gen_dim = 2;
  std::vector<int> gen_n{16};
  double gen_jitter = 0.0;
  std::string gen_out = "mesh";
  auto* gen = app.add_subcommand("gen-mesh", "write generated meshes as .node/.ele");
  gen->add_option("--dim", gen_dim)->check(CLI::IsMember({2, 3}));
  gen->add_option("--n", gen_n, "nodes per side; several values write a series")->check(CLI::Range(2, 100000));
  gen->add_option("--jitter", gen_jitter)->check(CLI::Range(0.0, 0.45));
  std::string gen_kind = "structured";
  gen->add_option("--kind", gen_kind, "structured, or unstructured Delaunay with about n^2 nodes (2D)")->check(CLI::IsMember({"structured", "unstructured"}));
  gen->add_option("--out", gen_out, "output base path; the node count per side is appended for a series");

  // mesh-info
  std::string info_mesh;
  auto* info = app.add_subcommand("mesh-info", "print node/element counts and the quality report");
  info->add_option("--mesh", info_mesh, "mesh base path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      const Method m = resolve_method(solve_opt.method, solve_opt.load_mode);
      MeshSource src;
      if (!solve_mesh.empty()) {
        src = mesh_from_file(solve_mesh);
      } else {
        const int dim = solve_opt.dim, n = solve_n;
        const double jit = solve_jitter;
        src = [=] { return generate_mesh(solve_kind, n, dim, jit); };
      }
      // The solver defaults depend on the mesh dimension, known only after loading.
      auto shared = std::make_shared<const mesh::MeshTopology>(src());
      const auto cfg = solver_config(solve_opt, m, shared->dim(), Experiment::Accuracy);
      auto r = run_case(m, given_mesh(shared), parse_solution(solve_opt.solution), pde_spec(solve_opt), cfg, assembly_options(solve_opt));
      Sink sink(solve_opt.out);
      if (format == "json") {
        sink.os() << report_json(r).dump(2) << '\n';
      } else {
        sink.os() << kCsvHeader << '\n' << csv_row(r) << '\n';
      }
      if (!ok(r)) {
        std::cerr << "solve did not converge" << (r.failure.empty() ? "" : ": " + r.failure) << '\n';
        return 2;
      }
      return 0;
    }

    if (conv->parsed()) {
      std::vector<MeshSource> sources;
      int dim = conv_opt.dim;
      if (!conv_meshes.empty()) {
        for (const auto& p : conv_meshes) sources.push_back(mesh_from_file(p));
        dim = mesh::load_mesh(conv_meshes.front()).dim();
      } else {
        if (conv_levels.empty()) conv_levels = dim == 2 ? std::vector<int>{16, 32, 64, 128} : std::vector<int>{8, 16, 32};
        for (int n : conv_levels) {
          const double jit = conv_jitter;
          sources.push_back([=] { return generate_mesh(conv_kind, n, dim, jit); });
        }
      }
      if (sources.size() < 2) throw std::invalid_argument("convergence needs at least two meshes");
      Sink sink(conv_opt.out);
      sink.os() << kCsvHeader << ",l2_rate,linf_rate\n";
      bool all_ok = true;
      for (const Method m : parse_methods(conv_methods)) {
        const auto cfg = solver_config(conv_opt, m, dim, Experiment::Accuracy);
        const auto study = convergence_study(m, sources, parse_solution(conv_opt.solution), pde_spec(conv_opt), cfg, assembly_options(conv_opt));
        for (const auto& r : study.levels) {
          sink.os() << csv_row(r) << ',' << study.l2_rate << ',' << study.linf_rate << '\n';
          all_ok = all_ok && ok(r);
        }
        sink.os().flush();
      }
      return all_ok ? 0 : 2;
    }

    if (sweep->parsed()) {
      mesh::MeshTopology base = [&] {
        if (!sweep_mesh.empty()) return mesh::load_mesh(sweep_mesh);
        const int n = sweep_n > 0 ? sweep_n : (sweep_opt.dim == 2 ? 256 : 24);
        const std::string kind = !sweep_kind.empty() ? sweep_kind : (sweep_opt.dim == 2 ? "unstructured" : "structured");
        const double jit = sweep_jitter >= 0.0 ? sweep_jitter : (kind == "structured" ? 0.2 : 0.0);
        return generate_mesh(kind, n, sweep_opt.dim, jit);
      }();
      std::vector<mesh::ElemId> targets(sweep_targets.begin(), sweep_targets.end());
      if (targets.empty()) targets = mesh::select_degradation_targets(base, sweep_num_targets);
      if (targets.empty()) throw std::invalid_argument("no degradation targets found");
      const auto methods = parse_methods(sweep_methods);
      const int dim = base.dim();
      auto solver_for = [&](Method m) { return solver_config(sweep_opt, m, dim, Experiment::QualitySweep); };
      const auto result =
          quality_sweep(base, targets, fractions, methods, parse_solution(sweep_opt.solution), pde_spec(sweep_opt), solver_for, assembly_options(sweep_opt));
      Sink sink(sweep_opt.out);
      sink.os() << "fraction," << kCsvHeader << '\n';
      bool all_ok = true;
      for (const auto& p : result.points) {
        for (const auto& r : p.runs) {
          sink.os() << p.fraction << ',' << csv_row(r) << '\n';
          all_ok = all_ok && ok(r);
        }
      }
      if (!result.stopped_reason.empty()) {
        std::cerr << "sweep stopped early: " << result.stopped_reason << '\n';
        return 2;
      }
      return all_ok ? 0 : 2;
    }

    if (gen->parsed()) {
      for (int n : gen_n) {
        const auto m = generate_mesh(gen_kind, n, gen_dim, gen_jitter);
        const std::string base = gen_n.size() > 1 ? gen_out + "_" + std::to_string(n) : gen_out;
        if (auto dir = std::filesystem::path(base).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
        mesh::write_mesh(m, base);
        std::cout << base << ".node " << base << ".ele " << m.num_nodes() << " nodes " << m.num_elements() << " elements\n";
      }
      return 0;
    }

    if (info->parsed()) {
      const auto m = mesh::load_mesh(info_mesh);
      const auto q = mesh::mesh_quality(m);
      std::size_t boundary = 0;
      for (bool b : m.boundary_flags()) boundary += b ? 1 : 0;
      std::cout << "dim,nodes,elements,boundary_nodes,min_angle_deg,max_angle_deg,max_aspect_ratio,cot_min_angle\n"
                << m.dim() << ',' << m.num_nodes() << ',' << m.num_elements() << ',' << boundary << ',' << q.min_angle << ',' << q.max_angle << ','
                << q.max_aspect_ratio << ',' << q.cot_min_angle() << '\n';
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  }
  return 0;
}

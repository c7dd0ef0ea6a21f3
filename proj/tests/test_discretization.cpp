// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "aesfem/assembly.hpp"
#include "aesfem/delaunay.hpp"
#include "aesfem/problem.hpp"
#include "aesfem/quadrature.hpp"
#include "support.hpp"

using namespace aesfem;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double fact(int n) { return n <= 1 ? 1.0 : n * fact(n - 1); }

// Exact integral of x^a y^b z^c over the reference simplex.
double ref_integral(int dim, int a, int b, int c) {
  return dim == 2 ? fact(a) * fact(b) / fact(a + b + 2) : fact(a) * fact(b) * fact(c) / fact(a + b + c + 3);
}

double rule_integral(const quad::QuadratureRule& r, int a, int b, int c) {
  double s = 0.0;
  for (std::size_t q = 0; q < r.size(); ++q) {
    const auto& p = r.points[q];
    s += r.weights[q] * std::pow(p[1], a) * std::pow(p[2], b) * (r.dim == 3 ? std::pow(p[3], c) : 1.0);
  }
  return s;
}

int exact_degree(const quad::QuadratureRule& r) {
  for (int deg = 0; deg <= 8; ++deg) {
    for (int a = 0; a <= deg; ++a) {
      for (int b = 0; a + b <= deg; ++b) {
        const int c = r.dim == 3 ? deg - a - b : 0;
        if (r.dim == 2 && a + b != deg) continue;
        if (std::abs(rule_integral(r, a, b, c) - ref_integral(r.dim, a, b, c)) > 1e-14) return deg - 1;
      }
    }
  }
  return 8;
}

// Full row i over all nodes: free part plus eliminated Dirichlet part.
std::map<mesh::NodeId, double> full_row(const LinearSystem& s, std::size_t k) {
  std::map<mesh::NodeId, double> row;
  const auto fi = s.matrix.row_indices(k);
  const auto fv = s.matrix.row_values(k);
  for (std::size_t p = 0; p < fi.size(); ++p) row[s.free_nodes[fi[p]]] += fv[p];
  const auto bi = s.boundary_coupling.row_indices(k);
  const auto bv = s.boundary_coupling.row_values(k);
  for (std::size_t p = 0; p < bi.size(); ++p) row[bi[p]] += bv[p];
  return row;
}

std::vector<double> dense_solve(const LinearSystem& s) {
  const Eigen::VectorXd x = test::to_dense(s.matrix).partialPivLu().solve(test::to_eigen(s.rhs));
  return expand_solution(s, std::vector<double>(x.data(), x.data() + x.size()));
}

double max_nodal_error(const mesh::MeshTopology& m, const std::vector<double>& u, const ProblemCase& p) {
  double e = 0.0;
  for (std::size_t v = 0; v < m.num_nodes(); ++v) e = std::max(e, std::abs(u[v] - p.u(m.coord(static_cast<mesh::NodeId>(v)))));
  return e;
}

std::vector<LinearSystem> all_methods(const mesh::MeshTopology& m, const ProblemCase& p, const AssemblyOptions& opt = {}) {
  std::vector<LinearSystem> out;
  out.push_back(assemble_linear_fem(m, p, opt));
  out.push_back(assemble_aes_fem(m, p, LoadMode::AesFem1, opt));
  out.push_back(assemble_aes_fem(m, p, LoadMode::AesFem2, opt));
  out.push_back(assemble_gfd(m, p, opt));
  return out;
}

}  // namespace

TEST_CASE("quadrature rules", "[quadrature]") {
  for (int dim : {2, 3}) {
    for (auto purpose : {quad::Purpose::Stiffness, quad::Purpose::Load, quad::Purpose::HighOrder}) {
      const auto r = quad::quadrature_rule(dim, purpose);
      double sum = 0.0;
      for (std::size_t q = 0; q < r.size(); ++q) {
        REQUIRE(r.weights[q] > 0.0);
        double bary = 0.0;
        for (int a = 0; a <= dim; ++a) {
          REQUIRE(r.points[q][a] >= 0.0);
          bary += r.points[q][a];
        }
        REQUIRE_THAT(bary, WithinAbs(1.0, 1e-15));
        sum += r.weights[q];
      }
      REQUIRE_THAT(sum, WithinAbs(quad::reference_measure(dim), 1e-15));
    }
  }
  const auto s2 = quad::quadrature_rule(2, quad::Purpose::Stiffness);
  const auto l2 = quad::quadrature_rule(2, quad::Purpose::Load);
  const auto s3 = quad::quadrature_rule(3, quad::Purpose::Stiffness);
  const auto l3 = quad::quadrature_rule(3, quad::Purpose::Load);
  REQUIRE(s2.size() == 1);
  REQUIRE(l2.size() == 3);
  REQUIRE(s3.size() == 1);
  REQUIRE(l3.size() == 4);
  REQUIRE_THAT(rule_integral(l2, 1, 1, 0), WithinAbs(1.0 / 24.0, 1e-16));
  REQUIRE(exact_degree(s2) == 1);
  REQUIRE(exact_degree(s3) == 1);
  REQUIRE(exact_degree(l2) == 2);
  REQUIRE(exact_degree(l3) == 2);
  REQUIRE(exact_degree(quad::quadrature_rule(2, quad::Purpose::HighOrder)) >= 4);
  REQUIRE(exact_degree(quad::quadrature_rule(3, quad::Purpose::HighOrder)) >= 3);
  // Edge midpoints in 2D.
  for (const auto& p : l2.points) REQUIRE(std::count(p.begin(), p.begin() + 3, 0.5) == 2);
  REQUIRE_THROWS(quad::quadrature_rule(4, quad::Purpose::Load));
}

TEST_CASE("element geometry", "[quadrature]") {
  const mesh::MeshTopology ref(2, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2, -1}});
  const auto g = quad::element_geometry(ref, 0);
  REQUIRE_THAT(g.measure, WithinAbs(0.5, 1e-16));
  const std::array<std::array<double, 2>, 3> want{{{-1, -1}, {1, 0}, {0, 1}}};
  for (int a = 0; a < 3; ++a) {
    REQUIRE_THAT(g.hat_gradients[a][0], WithinAbs(want[a][0], 1e-16));
    REQUIRE_THAT(g.hat_gradients[a][1], WithinAbs(want[a][1], 1e-16));
  }
  // Gradients of barycentrics satisfy grad(lambda_a) . (v_b - v_0) = delta_ab - delta_a0.
  std::mt19937_64 rng(4);
  for (int dim : {2, 3}) {
    const auto m = mesh::jitter_mesh(mesh::generate_structured_mesh(4, dim), 0.3, 8);
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
      const auto geo = quad::element_geometry(m, static_cast<mesh::ElemId>(e));
      REQUIRE_THAT(geo.measure, WithinRel(m.measure(static_cast<mesh::ElemId>(e)), 1e-12));
      for (int a = 0; a <= dim; ++a) {
        for (int b = 1; b <= dim; ++b) {
          double s = 0.0;
          for (int c = 0; c < 3; ++c) s += geo.hat_gradients[a][c] * (geo.vertices[b][c] - geo.vertices[0][c]);
          const double expect = (a == b ? 1.0 : 0.0) - (a == 0 ? 1.0 : 0.0);
          REQUIRE_THAT(s, WithinAbs(expect, 1e-12));
        }
      }
    }
  }
}

TEST_CASE("analytic problems", "[problem]") {
  const auto u1 = analytic_solution(SolutionId::U1, 2);
  REQUIRE_THAT(u1.u({0.5, 0.5, 0}), WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(analytic_solution(SolutionId::U1, 3).u({0.5, 0.5, 0.5}), WithinAbs(1.0, 1e-15));
  const Vec3 x{0.3, 0.7, 0.2};
  REQUIRE_THAT(u1.f(x), WithinRel(32.0 * (x[0] * (1 - x[0]) + x[1] * (1 - x[1])), 1e-14));
  const auto u2 = analytic_solution(SolutionId::U2, 2);
  REQUIRE_THAT(u2.f(x), WithinRel(2.0 * std::numbers::pi * std::numbers::pi * u2.u(x), 1e-14));
  REQUIRE_THAT(analytic_solution(SolutionId::U3, 2).u({1, 1, 0}), WithinAbs(1.0, 1e-14));
  REQUIRE_THAT(analytic_solution(SolutionId::U3, 3).u({1, 1, 1}), WithinAbs(1.0, 1e-14));

  // Central finite differences of u against grad and f for every case.
  const double h = 1e-4;
  for (int dim : {2, 3}) {
    for (auto id : {SolutionId::U1, SolutionId::U2, SolutionId::U3, SolutionId::Quadratic, SolutionId::Linear, SolutionId::Zero}) {
      for (auto kind : {PdeKind::Poisson, PdeKind::ConvectionDiffusion}) {
        const PdeSpec pde{kind, {0.7, -1.3, 0.4}};
        const auto p = analytic_solution(id, dim, pde);
        for (const Vec3& y : {Vec3{0.21, 0.63, 0.47}, Vec3{0.9, 0.1, 0.33}}) {
          double lap = 0.0, conv = 0.0;
          const auto g = p.grad(y);
          for (int k = 0; k < dim; ++k) {
            Vec3 a = y, b = y;
            a[k] += h;
            b[k] -= h;
            const double d1 = (p.u(a) - p.u(b)) / (2 * h);
            REQUIRE_THAT(g[k], WithinAbs(d1, 1e-6 * std::max(1.0, std::abs(d1))));
            lap += (p.u(a) - 2 * p.u(y) + p.u(b)) / (h * h);
            conv += pde.c[k] * d1;
          }
          const double f = -lap + (kind == PdeKind::ConvectionDiffusion ? conv : 0.0);
          REQUIRE_THAT(p.f(y), WithinAbs(f, 1e-4 * std::max(1.0, std::abs(f))));
          REQUIRE(p.g(y) == p.u(y));
        }
      }
    }
  }
  REQUIRE(parse_solution("u2") == SolutionId::U2);
  REQUIRE(parse_pde("convdiff") == PdeKind::ConvectionDiffusion);
  REQUIRE_THROWS(parse_solution("u9"));
  REQUIRE_THROWS(analytic_solution(SolutionId::U1, 4));
}

TEST_CASE("linear FEM five-point stencil", "[assembly][fem]") {
  const auto m = mesh::generate_structured_mesh(5, 2);
  const auto p = analytic_solution(SolutionId::U1, 2);
  const auto s = assemble_linear_fem(m, p);
  REQUIRE(s.num_free() == 9);
  REQUIRE(s.matrix.asymmetry() == 0.0);
  const mesh::NodeId c = 2 + 2 * 5;
  const auto row = full_row(s, static_cast<std::size_t>(s.free_index[c]));
  REQUIRE(row.size() == 7);
  REQUIRE_THAT(row.at(c), WithinAbs(4.0, 1e-14));
  for (mesh::NodeId nb : {c - 1, c + 1, c - 5, c + 5}) REQUIRE_THAT(row.at(nb), WithinAbs(-1.0, 1e-14));
  // Diagonal neighbours across the split are structural zeros.
  REQUIRE_THAT(row.at(c + 6), WithinAbs(0.0, 1e-14));
  REQUIRE_THAT(row.at(c - 6), WithinAbs(0.0, 1e-14));
}

TEST_CASE("system layout and Dirichlet elimination", "[assembly][dirichlet]") {
  REQUIRE(SystemBuilder::apply_dirichlet(3.0, 2.0, 0.0) == 3.0);
  REQUIRE(SystemBuilder::apply_dirichlet(3.0, 2.0, 0.5) == 2.0);

  // One free node: the 1x1 system divides out.
  const auto m = mesh::generate_structured_mesh(3, 2);
  const auto p = analytic_solution(SolutionId::Quadratic, 2);
  for (const auto& s : all_methods(m, p)) {
    REQUIRE(s.num_free() == 1);
    REQUIRE(s.matrix.rows() == 1);
    const auto u = expand_solution(s, std::vector<double>{s.rhs[0] / s.matrix.coeff(0, 0)});
    REQUIRE(u[4] == s.rhs[0] / s.matrix.coeff(0, 0));
    REQUIRE(u[0] == p.u(m.coord(0)));
  }

  // Unreferenced nodes take their exact value and get no row.
  const mesh::MeshTopology orphan(2, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.4, 0.4, 0}}, {{0, 1, 2, -1}});
  const auto so = assemble_aes_fem(orphan, p, LoadMode::AesFem2);
  REQUIRE(so.num_free() == 0);
  REQUIRE(so.dirichlet[3]);

  const auto jm = mesh::generate_unstructured_mesh(200, 3);
  for (const auto& s : all_methods(jm, analytic_solution(SolutionId::U2, 2))) {
    REQUIRE(s.matrix.rows() == s.num_free());
    REQUIRE(s.matrix.cols() == s.num_free());
    REQUIRE(s.rhs.size() == s.num_free());
    REQUIRE(s.boundary_coupling.cols() == jm.num_nodes());
    for (std::size_t k = 0; k < s.num_free(); ++k) REQUIRE(!s.matrix.row_indices(k).empty());
    // rhs = load - coupling * g.
    const auto zero = analytic_solution(SolutionId::U2, 2);
    (void)zero;
  }
}

TEST_CASE("homogeneous data leaves the load untouched", "[assembly][dirichlet]") {
  // u1 vanishes on the boundary: rhs equals the pure load.
  const auto m = mesh::generate_unstructured_mesh(300, 2);
  const auto p = analytic_solution(SolutionId::U1, 2);
  const auto s = assemble_gfd(m, p);
  for (std::size_t k = 0; k < s.num_free(); ++k) REQUIRE_THAT(s.rhs[k], WithinAbs(p.f(m.coord(s.free_nodes[k])), 1e-12));
}

TEST_CASE("rows annihilate constants", "[assembly][property]") {
  for (int dim : {2, 3}) {
    const auto m = dim == 2 ? mesh::generate_unstructured_mesh(300, 9) : mesh::jitter_mesh(mesh::generate_structured_mesh(5, 3), 0.2);
    for (auto kind : {PdeKind::Poisson, PdeKind::ConvectionDiffusion}) {
      const auto p = analytic_solution(SolutionId::U2, dim, {kind, {1, 1, 1}});
      for (const auto& s : all_methods(m, p)) {
        for (std::size_t k = 0; k < s.num_free(); ++k) {
          double sum = 0.0, mag = 0.0;
          for (const auto& [j, v] : full_row(s, k)) {
            sum += v;
            mag = std::max(mag, std::abs(v));
          }
          REQUIRE(std::abs(sum) <= 1e-12 * mag);
        }
      }
    }
  }
}

TEST_CASE("patch tests", "[assembly][patch]") {
  SECTION("linear solutions are reproduced by every method") {
    for (int dim : {2, 3}) {
      const auto m = dim == 2 ? mesh::generate_unstructured_mesh(250, 4) : mesh::jitter_mesh(mesh::generate_structured_mesh(5, 3), 0.2);
      for (auto kind : {PdeKind::Poisson, PdeKind::ConvectionDiffusion}) {
        const auto p = analytic_solution(SolutionId::Linear, dim, {kind, {1, -2, 0.5}});
        for (const auto& s : all_methods(m, p)) REQUIRE(max_nodal_error(m, dense_solve(s), p) <= 1e-10);
      }
    }
  }
  SECTION("quadratic solutions separate WLS methods from linear FEM") {
    for (int dim : {2, 3}) {
      const auto m = dim == 2 ? mesh::generate_unstructured_mesh(250, 4) : mesh::jitter_mesh(mesh::generate_structured_mesh(5, 3), 0.2);
      const auto p = analytic_solution(SolutionId::Quadratic, dim);
      const auto all = all_methods(m, p);
      REQUIRE(max_nodal_error(m, dense_solve(all[0]), p) >= 1e-5);
      for (std::size_t k = 1; k < all.size(); ++k) REQUIRE(max_nodal_error(m, dense_solve(all[k]), p) <= 1e-9);
    }
  }
  SECTION("exact nodal values leave a tiny residual") {
    const auto m = mesh::generate_unstructured_mesh(250, 6);
    const auto p = analytic_solution(SolutionId::Quadratic, 2);
    for (const auto& s : {assemble_aes_fem(m, p, LoadMode::AesFem1), assemble_aes_fem(m, p, LoadMode::AesFem2), assemble_gfd(m, p)}) {
      std::vector<double> u(s.num_free());
      for (std::size_t k = 0; k < u.size(); ++k) u[k] = p.u(m.coord(s.free_nodes[k]));
      const auto au = s.matrix * u;
      for (std::size_t k = 0; k < u.size(); ++k) REQUIRE(std::abs(au[k] - s.rhs[k]) <= 1e-10 * std::max(1.0, std::abs(s.rhs[k])));
    }
  }
}

TEST_CASE("AES-FEM structure", "[assembly][aesfem]") {
  const auto m = mesh::generate_unstructured_mesh(400, 12);
  const auto p = analytic_solution(SolutionId::U1, 2, {PdeKind::ConvectionDiffusion, {1, 1, 1}});
  const auto a1 = assemble_aes_fem(m, p, LoadMode::AesFem1);
  const auto a2 = assemble_aes_fem(m, p, LoadMode::AesFem2);
  const auto fem = assemble_linear_fem(m, p);
  const auto gfd = assemble_gfd(m, p);
  REQUIRE(a1.matrix == a2.matrix);
  REQUIRE(a1.boundary_coupling == a2.boundary_coupling);
  REQUIRE(a1.rhs != a2.rhs);

  std::size_t incident = 0;
  for (auto v : a1.free_nodes) incident += mesh::one_ring_elements(m, v).size();
  REQUIRE(gfd.stats.diff_wls_calls == gfd.num_free());
  REQUIRE(a1.stats.diff_wls_calls == incident);
  REQUIRE(a2.stats.diff_wls_calls == 2 * incident);

  // With only 1-ring stencils the sparsity equals linear FEM's.
  const auto sm = mesh::generate_structured_mesh(9, 2);
  const auto sp = analytic_solution(SolutionId::U2, 2);
  const auto sa = assemble_aes_fem(sm, sp, LoadMode::AesFem2);
  const auto sf = assemble_linear_fem(sm, sp);
  REQUIRE(sa.stats.extended_stencils == 0);
  REQUIRE(sa.matrix.nnz() == sf.matrix.nnz());
  REQUIRE(sa.matrix.indices() == sf.matrix.indices());
  REQUIRE(sa.matrix.offsets() == sf.matrix.offsets());
  // On the regular grid AES-FEM's stiffness reproduces the five-point stencil.
  const auto fd = test::to_dense(sf.matrix), ad = test::to_dense(sa.matrix);
  REQUIRE((fd - ad).cwiseAbs().maxCoeff() < 1e-12);

  // The higher-order rule only touches the load for Poisson.
  AssemblyOptions hi;
  hi.high_order_load = true;
  const auto jm = mesh::generate_unstructured_mesh(300, 2);
  const auto jp = analytic_solution(SolutionId::U1, 2);
  const auto lo2 = assemble_aes_fem(jm, jp, LoadMode::AesFem2);
  const auto hi2 = assemble_aes_fem(jm, jp, LoadMode::AesFem2, hi);
  REQUIRE(lo2.matrix == hi2.matrix);
  REQUIRE(lo2.rhs != hi2.rhs);
}

TEST_CASE("GFD rows differentiate quadratics", "[assembly][gfd]") {
  const auto m = mesh::generate_unstructured_mesh(300, 5);
  const auto p = analytic_solution(SolutionId::U1, 2);
  const auto s = assemble_gfd(m, p);
  for (std::size_t k = 0; k < s.num_free(); ++k) {
    double v = 0.0;
    for (const auto& [j, w] : full_row(s, k)) v += w * m.coord(j)[0] * m.coord(j)[0];
    REQUIRE_THAT(v, WithinAbs(-2.0, 1e-9 * std::max(1.0, s.matrix.norm1())));
  }
}

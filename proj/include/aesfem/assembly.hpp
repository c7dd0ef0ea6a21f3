// SPDX-License-Identifier: Apache-2.0
#pragma once

// Linear systems for AES-FEM (two load variants), linear FEM and GFD.
// All methods assemble A u = b for -lap u (+ c . grad u) = f over the free
// nodes, with Dirichlet columns moved to the right-hand side.

#include <cstdint>
#include <span>
#include <vector>

#include "aesfem/linalg/sparse.hpp"
#include "aesfem/mesh.hpp"
#include "aesfem/problem.hpp"
#include "aesfem/quadrature.hpp"
#include "aesfem/stencil.hpp"
#include "aesfem/wls.hpp"

namespace aesfem {

enum class LoadMode { AesFem1, AesFem2 };

struct AssemblyOptions {
  WlsConfig wls;
  bool high_order_load = false;  // collapsed Gauss rule for load and convection terms
};

struct AssemblyStats {
  std::size_t diff_wls_calls = 0;
  std::size_t max_stencil_size = 0;
  double mean_stencil_size = 0.0;
  std::size_t extended_stencils = 0;  // stencils beyond the 1-ring
  std::size_t rank_deficient_stencils = 0;
};

struct LinearSystem {
  linalg::SparseRowMatrix matrix;  // free x free
  std::vector<double> rhs;
  std::vector<mesh::NodeId> free_nodes;       // free index -> node
  std::vector<std::int32_t> free_index;       // node -> free index, -1 for Dirichlet
  std::vector<bool> dirichlet;
  std::vector<double> dirichlet_values;       // g at Dirichlet nodes, 0 elsewhere
  linalg::SparseRowMatrix boundary_coupling;  // free x all nodes: eliminated coefficients
  AssemblyStats stats;

  [[nodiscard]] std::size_t num_free() const { return free_nodes.size(); }
};

/// Row-by-row builder. Entries in Dirichlet columns are eliminated into the
/// right-hand side as they are added.
class SystemBuilder {
public:
  SystemBuilder(const mesh::MeshTopology& m, const ProblemCase& problem) : scratch_(m.num_nodes(), 0.0), touched_(m.num_nodes(), 0) {
    const std::size_t n = m.num_nodes();
    sys_.dirichlet.assign(n, false);
    sys_.dirichlet_values.assign(n, 0.0);
    sys_.free_index.assign(n, -1);
    const auto boundary = m.boundary_flags();
    for (std::size_t v = 0; v < n; ++v) {
      const auto id = static_cast<mesh::NodeId>(v);
      // Unreferenced nodes would give empty rows; they take their exact value.
      if (boundary[v] || !m.is_referenced(id)) {
        sys_.dirichlet[v] = true;
        sys_.dirichlet_values[v] = problem.g(m.coord(id));
      } else {
        sys_.free_index[v] = static_cast<std::int32_t>(sys_.free_nodes.size());
        sys_.free_nodes.push_back(id);
      }
    }
    sys_.matrix = linalg::SparseRowMatrix(0, sys_.free_nodes.size());
    sys_.boundary_coupling = linalg::SparseRowMatrix(0, n);
    sys_.rhs.reserve(sys_.free_nodes.size());
  }

  [[nodiscard]] const std::vector<mesh::NodeId>& free_nodes() const { return sys_.free_nodes; }

  void add(mesh::NodeId j, double value) {
    if (!touched_[j]) {
      touched_[j] = 1;
      cols_.push_back(j);
    }
    scratch_[j] += value;
  }
  void add_rhs(double value) { row_rhs_ += value; }

  /// Closes the current row, applying the Dirichlet elimination.
  void finish_row() {
    std::sort(cols_.begin(), cols_.end());
    fcols_.clear();
    fvals_.clear();
    bcols_.clear();
    bvals_.clear();
    double b = row_rhs_;
    for (mesh::NodeId j : cols_) {
      const double v = scratch_[j];
      if (sys_.dirichlet[j]) {
        b = apply_dirichlet(b, v, sys_.dirichlet_values[j]);
        bcols_.push_back(j);
        bvals_.push_back(v);
      } else {
        fcols_.push_back(sys_.free_index[j]);
        fvals_.push_back(v);
      }
      scratch_[j] = 0.0;
      touched_[j] = 0;
    }
    // Free columns are ascending because free indices follow node order.
    sys_.matrix.push_row(fcols_, fvals_);
    sys_.boundary_coupling.push_row(bcols_, bvals_);
    sys_.rhs.push_back(b);
    cols_.clear();
    row_rhs_ = 0.0;
  }

  /// rhs_i - k_ij g_j for an eliminated column.
  static double apply_dirichlet(double rhs_i, double k_ij, double g_j) { return rhs_i - k_ij * g_j; }

  LinearSystem take(AssemblyStats stats) {
    if (sys_.rhs.size() != sys_.free_nodes.size()) throw linalg::LinalgError("assembly finished with missing rows");
    sys_.stats = stats;
    return std::move(sys_);
  }

private:
  LinearSystem sys_;
  std::vector<double> scratch_;
  std::vector<char> touched_;
  std::vector<mesh::NodeId> cols_;
  std::vector<std::int32_t> fcols_, bcols_;
  std::vector<double> fvals_, bvals_;
  double row_rhs_ = 0.0;
};

namespace detail {

inline void record_stencil(AssemblyStats& st, const NodeStencil& s, std::size_t rows_done) {
  st.max_stencil_size = std::max(st.max_stencil_size, s.size());
  st.mean_stencil_size += (static_cast<double>(s.size()) - st.mean_stencil_size) / static_cast<double>(rows_done + 1);
  if (s.ring.value() > 1.0) ++st.extended_stencils;
  if (!s.gvm.full_rank()) ++st.rank_deficient_stencils;
}

inline std::vector<double> nodal_values(const mesh::MeshTopology& m, const std::function<double(const Vec3&)>& fn) {
  std::vector<double> v(m.num_nodes());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(m.coord(static_cast<mesh::NodeId>(i)));
  return v;
}

inline quad::QuadratureRule load_rule(int dim, const AssemblyOptions& opt) {
  return quad::quadrature_rule(dim, opt.high_order_load ? quad::Purpose::HighOrder : quad::Purpose::Load);
}

}  // namespace detail

/// AES-FEM: hat test functions against GLP trial functions over an adaptive
/// stencil per free node. The stiffness part is the same for both load
/// modes; AesFem1 interpolates f with hat functions, AesFem2 with the GLP
/// basis of the stencil.
inline LinearSystem assemble_aes_fem(const mesh::MeshTopology& m, const ProblemCase& problem, LoadMode mode, const AssemblyOptions& opt = {}) {
  const int dim = m.dim();
  SystemBuilder builder(m, problem);
  AssemblyStats stats;
  const auto fnode = detail::nodal_values(m, problem.f);
  const auto stiff_rule = quad::quadrature_rule(dim, quad::Purpose::Stiffness);
  const auto load_rule = detail::load_rule(dim, opt);
  const bool conv = problem.pde.has_convection();

  std::vector<double> a, a_load, d, dp;
  std::size_t row = 0;
  for (mesh::NodeId i : builder.free_nodes()) {
    const NodeStencil s = build_node_stencil(m, i, opt.wls);
    detail::record_stencil(stats, s, row++);
    const std::size_t n = s.gvm.num_terms();
    a.assign(n, 0.0);
    a_load.assign(n, 0.0);
    dp.resize(n);
    d.resize(s.size());

    for (mesh::ElemId e : mesh::one_ring_elements(m, i)) {
      const auto geo = quad::element_geometry(m, e);
      const int li = m.local_index(e, i);
      const auto& gpsi = geo.hat_gradients[li];
      std::fill(a.begin(), a.end(), 0.0);
      for (std::size_t q = 0; q < stiff_rule.size(); ++q) {
        const auto xq = s.local(geo.point(stiff_rule.points[q]));
        const double w = stiff_rule.weights[q] * geo.scale();
        for (int k = 0; k < dim; ++k) {
          wls::monomials_eval(xq, s.gvm.basis, wls::MultiIndex::axis(k), dp);
          for (std::size_t t = 0; t < n; ++t) a[t] += w * gpsi[k] * dp[t];
        }
      }
      if (conv) {
        for (std::size_t q = 0; q < load_rule.size(); ++q) {
          const auto xq = s.local(geo.point(load_rule.points[q]));
          const double w = load_rule.weights[q] * geo.scale() * load_rule.points[q][li];
          for (int k = 0; k < dim; ++k) {
            wls::monomials_eval(xq, s.gvm.basis, wls::MultiIndex::axis(k), dp);
            for (std::size_t t = 0; t < n; ++t) a[t] += w * problem.pde.c[k] * dp[t];
          }
        }
      }
      wls::diff_wls(s.gvm, a, d);
      ++stats.diff_wls_calls;
      for (std::size_t j = 0; j < s.size(); ++j) builder.add(s.nodes[j], d[j]);

      const auto el = m.element(e);
      if (mode == LoadMode::AesFem1) {
        double b = 0.0;
        for (std::size_t q = 0; q < load_rule.size(); ++q) {
          double fq = 0.0;
          for (int v = 0; v <= dim; ++v) fq += load_rule.points[q][v] * fnode[el[v]];
          b += load_rule.weights[q] * load_rule.points[q][li] * fq;
        }
        builder.add_rhs(b * geo.scale());
      } else {
        std::fill(a_load.begin(), a_load.end(), 0.0);
        for (std::size_t q = 0; q < load_rule.size(); ++q) {
          const auto xq = s.local(geo.point(load_rule.points[q]));
          const double w = load_rule.weights[q] * geo.scale() * load_rule.points[q][li];
          wls::monomials_eval(xq, s.gvm.basis, {}, dp);
          for (std::size_t t = 0; t < n; ++t) a_load[t] += w * dp[t];
        }
        wls::diff_wls(s.gvm, a_load, d);
        ++stats.diff_wls_calls;
        double b = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) b += d[j] * fnode[s.nodes[j]];
        builder.add_rhs(b);
      }
    }
    builder.finish_row();
  }
  return builder.take(stats);
}

/// Galerkin linear FEM with hat functions; f interpolated from the nodes.
inline LinearSystem assemble_linear_fem(const mesh::MeshTopology& m, const ProblemCase& problem, const AssemblyOptions& opt = {}) {
  const int dim = m.dim();
  SystemBuilder builder(m, problem);
  const auto fnode = detail::nodal_values(m, problem.f);
  const auto load_rule = detail::load_rule(dim, opt);
  const bool conv = problem.pde.has_convection();

  for (mesh::NodeId i : builder.free_nodes()) {
    for (mesh::ElemId e : mesh::one_ring_elements(m, i)) {
      const auto geo = quad::element_geometry(m, e);
      const int li = m.local_index(e, i);
      const auto el = m.element(e);
      // Integral of the test function over the element.
      double psi_int = 0.0;
      double b = 0.0;
      for (std::size_t q = 0; q < load_rule.size(); ++q) {
        const double w = load_rule.weights[q] * geo.scale() * load_rule.points[q][li];
        psi_int += w;
        double fq = 0.0;
        for (int v = 0; v <= dim; ++v) fq += load_rule.points[q][v] * fnode[el[v]];
        b += w * fq;
      }
      builder.add_rhs(b);
      for (int v = 0; v <= dim; ++v) {
        double k = 0.0;
        for (int c = 0; c < dim; ++c) k += geo.hat_gradients[li][c] * geo.hat_gradients[v][c];
        k *= geo.measure;
        if (conv) {
          double cg = 0.0;
          for (int c = 0; c < dim; ++c) cg += problem.pde.c[c] * geo.hat_gradients[v][c];
          k += psi_int * cg;
        }
        builder.add(el[v], k);
      }
    }
    builder.finish_row();
  }
  return builder.take({});
}

/// Strong-form collocation: one WLS derivative stencil per free node for the
/// PDE operator at the node, right-hand side f(node).
inline LinearSystem assemble_gfd(const mesh::MeshTopology& m, const ProblemCase& problem, const AssemblyOptions& opt = {}) {
  const int dim = m.dim();
  SystemBuilder builder(m, problem);
  AssemblyStats stats;
  const bool conv = problem.pde.has_convection();
  const wls::Point origin{0.0, 0.0, 0.0};
  std::size_t row = 0;
  std::vector<double> a, dp;
  for (mesh::NodeId i : builder.free_nodes()) {
    const NodeStencil s = build_node_stencil(m, i, opt.wls);
    detail::record_stencil(stats, s, row++);
    const std::size_t n = s.gvm.num_terms();
    a.assign(n, 0.0);
    dp.resize(n);
    for (int k = 0; k < dim; ++k) {
      wls::monomials_eval(origin, s.gvm.basis, wls::MultiIndex::axis(k, 2), dp);
      for (std::size_t t = 0; t < n; ++t) a[t] -= dp[t];
      if (conv) {
        wls::monomials_eval(origin, s.gvm.basis, wls::MultiIndex::axis(k), dp);
        for (std::size_t t = 0; t < n; ++t) a[t] += problem.pde.c[k] * dp[t];
      }
    }
    const auto d = wls::diff_wls(s.gvm, a);
    ++stats.diff_wls_calls;
    for (std::size_t j = 0; j < s.size(); ++j) builder.add(s.nodes[j], d[j]);
    builder.add_rhs(problem.f(m.coord(i)));
    builder.finish_row();
  }
  return builder.take(stats);
}

/// Nodal solution over all nodes from the free-node solution.
inline std::vector<double> expand_solution(const LinearSystem& sys, std::span<const double> x_free) {
  std::vector<double> u = sys.dirichlet_values;
  for (std::size_t k = 0; k < sys.free_nodes.size(); ++k) u[sys.free_nodes[k]] = x_free[k];
  return u;
}

}  // namespace aesfem

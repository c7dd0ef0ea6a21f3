// SPDX-License-Identifier: Apache-2.0
#pragma once

// Weighted least squares over a point stencil: scaled, weighted generalized
// Vandermonde systems factored by QR with column pivoting (constant column
// pinned), derivative weights, and generalized Lagrange polynomial (GLP)
// basis functions.

#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aesfem/linalg/condest.hpp"

namespace aesfem::wls {

using Point = std::array<double, 3>;

class StencilError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Partial derivative orders along x, y, z.
struct MultiIndex {
  int x = 0;
  int y = 0;
  int z = 0;

  [[nodiscard]] int order() const { return x + y + z; }
  [[nodiscard]] int operator[](int k) const { return k == 0 ? x : (k == 1 ? y : z); }
  static MultiIndex axis(int k, int n = 1) { return {k == 0 ? n : 0, k == 1 ? n : 0, k == 2 ? n : 0}; }
};

/// Monomials up to a total degree, graded and ordered as
/// 2D: 1, x, y, x^2, xy, y^2, ...
/// 3D: 1, x, y, z, x^2, xy, y^2, xz, yz, z^2, ...
class MonomialBasis {
public:
  MonomialBasis() = default;
  MonomialBasis(int dim, int degree) : dim_(dim), degree_(degree) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("monomial basis dimension must be 2 or 3");
    if (degree < 1) throw std::invalid_argument("monomial basis degree must be >= 1");
    for (int p = 0; p <= degree; ++p) {
      for (int l = 0; l <= (dim == 3 ? p : 0); ++l) {
        for (int k = 0; k <= p - l; ++k) exponents_.push_back({p - l - k, k, l});
      }
    }
  }

  static std::size_t term_count(int dim, int degree) {
    return dim == 2 ? static_cast<std::size_t>((degree + 1) * (degree + 2) / 2)
                    : static_cast<std::size_t>((degree + 1) * (degree + 2) * (degree + 3) / 6);
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] std::size_t size() const { return exponents_.size(); }
  [[nodiscard]] const std::array<int, 3>& exponent(std::size_t t) const { return exponents_[t]; }

private:
  int dim_ = 2;
  int degree_ = 2;
  std::vector<std::array<int, 3>> exponents_;
};

namespace detail {
inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}
inline double falling(int n, int k) {
  double f = 1.0;
  for (int i = 0; i < k; ++i) f *= (n - i);
  return f;
}
inline double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}
}  // namespace detail

/// Taylor factors 1/(j! k! l!) aligned with the basis ordering.
inline std::vector<double> taylor_scaling(const MonomialBasis& basis) {
  std::vector<double> s(basis.size());
  for (std::size_t t = 0; t < basis.size(); ++t) {
    const auto& e = basis.exponent(t);
    s[t] = 1.0 / (detail::factorial(e[0]) * detail::factorial(e[1]) * detail::factorial(e[2]));
  }
  return s;
}

/// Writes the requested partial derivative of every monomial at x into out.
inline void monomials_eval(const Point& x, const MonomialBasis& basis, MultiIndex deriv, std::span<double> out) {
  for (std::size_t t = 0; t < basis.size(); ++t) {
    const auto& e = basis.exponent(t);
    if (e[0] < deriv.x || e[1] < deriv.y || e[2] < deriv.z) {
      out[t] = 0.0;
      continue;
    }
    double v = detail::falling(e[0], deriv.x) * detail::falling(e[1], deriv.y) * detail::falling(e[2], deriv.z);
    v *= detail::ipow(x[0], e[0] - deriv.x) * detail::ipow(x[1], e[1] - deriv.y) * detail::ipow(x[2], e[2] - deriv.z);
    out[t] = v;
  }
}

inline std::vector<double> monomials_eval(const Point& x, const MonomialBasis& basis, MultiIndex deriv = {}) {
  std::vector<double> out(basis.size());
  monomials_eval(x, basis, deriv, out);
  return out;
}

/// w_i = (||u_i|| / h + eps)^-1 with h the largest point norm.
inline std::vector<double> compute_row_weights(std::span<const Point> local, double epsilon) {
  double h = 0.0;
  std::vector<double> norms(local.size());
  for (std::size_t i = 0; i < local.size(); ++i) {
    norms[i] = std::sqrt(local[i][0] * local[i][0] + local[i][1] * local[i][1] + local[i][2] * local[i][2]);
    h = std::max(h, norms[i]);
  }
  if (!(h > 0.0)) throw StencilError("degenerate stencil: all points coincide with the center");
  std::vector<double> w(local.size());
  for (std::size_t i = 0; i < local.size(); ++i) w[i] = 1.0 / (norms[i] / h + epsilon);
  return w;
}

/// Points relative to the stencil center (first point, at the origin),
/// with their row weights.
struct LocalStencil {
  int dim = 2;
  std::int64_t center = -1;  // node id, or -1 for a free-standing point set
  std::vector<std::int64_t> nodes;
  std::vector<Point> local_coords;
  std::vector<double> row_weights;
  double radius = 0.0;

  [[nodiscard]] std::size_t size() const { return local_coords.size(); }
};

/// `points[0]` is the center. Coordinates beyond `dim` are ignored.
inline LocalStencil make_local_stencil(int dim, std::span<const Point> points, double weight_eps, std::span<const std::int64_t> node_ids = {}) {
  if (points.empty()) throw StencilError("empty stencil");
  LocalStencil s;
  s.dim = dim;
  s.local_coords.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int k = 0; k < 3; ++k) s.local_coords[i][k] = k < dim ? points[i][k] - points[0][k] : 0.0;
  }
  s.local_coords[0] = {0.0, 0.0, 0.0};
  s.row_weights = compute_row_weights(s.local_coords, weight_eps);
  for (const auto& u : s.local_coords) s.radius = std::max(s.radius, std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]));
  if (!node_ids.empty()) {
    s.nodes.assign(node_ids.begin(), node_ids.end());
    s.center = node_ids[0];
  }
  return s;
}

/// Factored form of W V S P = Q R for one stencil.
struct GvmFactor {
  MonomialBasis basis;
  std::vector<double> taylor;       // D
  std::vector<double> row_weights;  // W
  std::vector<double> col_scaling;  // S
  Eigen::MatrixXd q;                // m x k, k = min(m, n)
  Eigen::MatrixXd r;                // k x n, upper trapezoidal in pivoted order
  std::vector<int> perm;            // perm[i] = original column at pivoted position i
  int rank = 0;

  [[nodiscard]] std::size_t num_points() const { return static_cast<std::size_t>(q.rows()); }
  [[nodiscard]] std::size_t num_terms() const { return basis.size(); }
  [[nodiscard]] bool full_rank() const { return static_cast<std::size_t>(rank) == basis.size(); }
};

/// Largest r such that the estimated 1-norm condition number of every
/// leading block R[0:i,0:i], i <= r, stays within 1/eps.
inline int estimate_rank(const Eigen::MatrixXd& r, double epsilon) {
  const Eigen::Index k = std::min(r.rows(), r.cols());
  const double limit = 1.0 / epsilon;
  int rank = 0;
  for (Eigen::Index i = 1; i <= k; ++i) {
    if (r(i - 1, i - 1) == 0.0 || !std::isfinite(r(i - 1, i - 1))) break;
    double norm = 0.0;
    for (Eigen::Index c = 0; c < i; ++c) norm = std::max(norm, r.col(c).head(c + 1).cwiseAbs().sum());
    const auto block = r.topLeftCorner(i, i).triangularView<Eigen::Upper>();
    auto solve = [&](std::span<double> x) {
      Eigen::Map<Eigen::VectorXd> v(x.data(), i);
      block.solveInPlace(v);
    };
    auto solve_t = [&](std::span<double> x) {
      Eigen::Map<Eigen::VectorXd> v(x.data(), i);
      block.transpose().solveInPlace(v);
    };
    const double cond = norm * linalg::estimate_norm1(static_cast<std::size_t>(i), solve, solve_t);
    if (!(cond <= limit)) break;
    rank = static_cast<int>(i);
  }
  return rank;
}

/// Builds V with Taylor factors folded in, the weighting W, the column
/// scaling S = 1/||(W V)_j||_2, and factors W V S with Householder QR and
/// column pivoting, keeping the constant column first.
inline GvmFactor build_gvm(const LocalStencil& stencil, int degree, double rank_eps) {
  const std::size_t m = stencil.size();
  if (m == 0) throw StencilError("empty stencil");
  if (stencil.row_weights.size() != m) throw StencilError("row weight count does not match stencil size");
  GvmFactor g;
  g.basis = MonomialBasis(stencil.dim, degree);
  g.taylor = taylor_scaling(g.basis);
  g.row_weights = stencil.row_weights;
  const std::size_t n = g.basis.size();

  Eigen::MatrixXd a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  std::vector<double> row(n);
  for (std::size_t i = 0; i < m; ++i) {
    monomials_eval(stencil.local_coords[i], g.basis, {}, row);
    for (std::size_t t = 0; t < n; ++t) a(i, t) = stencil.row_weights[i] * row[t] * g.taylor[t];
  }
  g.col_scaling.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double cn = a.col(t).norm();
    g.col_scaling[t] = cn > 0.0 ? 1.0 / cn : 1.0;
    a.col(t) *= g.col_scaling[t];
  }

  g.perm.resize(n);
  std::iota(g.perm.begin(), g.perm.end(), 0);
  const Eigen::Index rows = a.rows();
  const Eigen::Index k = std::min<Eigen::Index>(rows, static_cast<Eigen::Index>(n));
  std::vector<double> tau(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (j > 0) {
      Eigen::Index best = j;
      double best_norm = -1.0;
      for (Eigen::Index c = j; c < a.cols(); ++c) {
        const double cn = a.col(c).tail(rows - j).squaredNorm();
        if (cn > best_norm) {
          best_norm = cn;
          best = c;
        }
      }
      if (best != j) {
        a.col(j).swap(a.col(best));
        std::swap(g.perm[j], g.perm[best]);
      }
    }
    // Householder H = I - tau v v^T with v(0) = 1 and H x = beta e_1.
    auto x = a.col(j).tail(rows - j);
    const double alpha = x.norm();
    if (alpha == 0.0) continue;
    const double x0 = x(0);
    const double beta = x0 >= 0.0 ? -alpha : alpha;
    Eigen::VectorXd v = x / (x0 - beta);
    v(0) = 1.0;
    tau[j] = (beta - x0) / beta;
    if (j + 1 < a.cols()) {
      auto trailing = a.block(j, j + 1, rows - j, a.cols() - j - 1);
      const Eigen::RowVectorXd vt = v.transpose() * trailing;
      trailing.noalias() -= tau[j] * v * vt;
    }
    a(j, j) = beta;
    a.col(j).tail(rows - j - 1) = v.tail(rows - j - 1);
  }

  g.q = Eigen::MatrixXd::Identity(rows, k);
  for (Eigen::Index j = k - 1; j >= 0; --j) {
    if (tau[j] == 0.0) continue;
    Eigen::VectorXd v(rows - j);
    v(0) = 1.0;
    v.tail(rows - j - 1) = a.col(j).tail(rows - j - 1);
    auto block = g.q.block(j, j, rows - j, k - j);
    const Eigen::RowVectorXd vt = v.transpose() * block;
    block.noalias() -= tau[j] * v * vt;
  }
  g.r = a.topRows(k).triangularView<Eigen::Upper>();
  g.rank = estimate_rank(g.r, rank_eps);
  return g;
}

/// Weights d with d^T g approximating D f at the point encoded in
/// a = D P(x), for g holding f at the stencil points. Uses the leading
/// rank-r part of the factorization.
inline void diff_wls(const GvmFactor& g, std::span<const double> a, std::span<double> d) {
  const int r = g.rank;
  Eigen::VectorXd y(r);
  for (int i = 0; i < r; ++i) {
    const int c = g.perm[i];
    y(i) = a[c] * g.taylor[c] * g.col_scaling[c];
  }
  for (int i = 0; i < r; ++i) {
    double s = y(i);
    for (int j = 0; j < i; ++j) s -= g.r(j, i) * y(j);
    y(i) = s / g.r(i, i);
  }
  const Eigen::Index m = g.q.rows();
  for (Eigen::Index p = 0; p < m; ++p) {
    double s = 0.0;
    for (int i = 0; i < r; ++i) s += g.q(p, i) * y(i);
    d[p] = g.row_weights[p] * s;
  }
}

inline std::vector<double> diff_wls(const GvmFactor& g, std::span<const double> a) {
  std::vector<double> d(g.num_points());
  diff_wls(g, a, d);
  return d;
}

/// Values (or a partial derivative) of all GLP basis functions of the
/// stencil at x, in local coordinates.
inline std::vector<double> glp_basis_eval(const GvmFactor& g, const Point& x, MultiIndex deriv = {}) {
  return diff_wls(g, monomials_eval(x, g.basis, deriv));
}

}  // namespace aesfem::wls

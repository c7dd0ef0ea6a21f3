// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "aesfem/linalg/preconditioners.hpp"
#include "aesfem/linalg/sparse.hpp"

namespace aesfem::linalg {

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  double tolerance = 0.0;
  bool converged = false;
  bool stagnated = false;
  double precond_seconds = 0.0;
  double solve_seconds = 0.0;
  std::vector<double> residual_history;  // relative residual after each iteration, entry 0 is the start
};

struct SolveResult {
  std::vector<double> x;
  SolveReport report;
};

struct KrylovOptions {
  double tol = 1e-8;
  int max_iter = 1000;
  int restart = 0;  // GMRES only; 0 means no restart
  int stagnation_window = 50;  // CG only: iterations without progress before giving up
};

namespace detail {
inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace detail

/// Left-preconditioned GMRES with modified Gram-Schmidt Arnoldi. Stops when
/// ||M^-1 (b - A x)|| <= tol ||M^-1 b||.
inline SolveResult gmres(const SparseRowMatrix& a, std::span<const double> b, const Preconditioner& m, const KrylovOptions& opt = {}) {
  if (!a.is_square() || a.rows() != b.size()) throw LinalgError("gmres: dimension mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  SolveResult res{std::vector<double>(n, 0.0), {}};
  res.report.tolerance = opt.tol;
  if (n == 0) {
    res.report.converged = true;
    return res;
  }

  std::vector<double> tmp(n), r(n);
  m.apply(b, r);
  const double bnorm = norm2(r);
  if (bnorm == 0.0) {
    res.report.converged = true;
    res.report.residual_history = {0.0};
    return res;
  }
  const int cycle = opt.restart > 0 ? opt.restart : opt.max_iter;
  std::vector<std::vector<double>> v;
  std::vector<std::vector<double>> h;
  std::vector<double> cs, sn, g;
  double rel = 1.0;
  res.report.residual_history.push_back(rel);
  int total = 0;

  while (total < opt.max_iter) {
    // r = M^-1 (b - A x)
    a.multiply(res.x, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = b[i] - tmp[i];
    m.apply(tmp, r);
    const double beta = norm2(r);
    rel = beta / bnorm;
    if (rel <= opt.tol) break;
    v.assign(1, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    h.clear();
    cs.clear();
    sn.clear();
    g.assign(1, beta);

    int k = 0;
    bool breakdown = false;
    for (; k < cycle && total < opt.max_iter; ++k, ++total) {
      a.multiply(v[k], tmp);
      std::vector<double> w(n);
      m.apply(tmp, w);
      std::vector<double> hk(k + 2, 0.0);
      for (int j = 0; j <= k; ++j) {
        hk[j] = dot(w, v[j]);
        for (std::size_t i = 0; i < n; ++i) w[i] -= hk[j] * v[j][i];
      }
      hk[k + 1] = norm2(w);
      for (int j = 0; j < k; ++j) {
        const double t = cs[j] * hk[j] + sn[j] * hk[j + 1];
        hk[j + 1] = -sn[j] * hk[j] + cs[j] * hk[j + 1];
        hk[j] = t;
      }
      const double denom = std::hypot(hk[k], hk[k + 1]);
      const double c = denom == 0.0 ? 1.0 : hk[k] / denom;
      const double s = denom == 0.0 ? 0.0 : hk[k + 1] / denom;
      const double hnext = hk[k + 1];
      hk[k] = c * hk[k] + s * hk[k + 1];
      hk[k + 1] = 0.0;
      cs.push_back(c);
      sn.push_back(s);
      g.push_back(-s * g[k]);
      g[k] = c * g[k];
      h.push_back(std::move(hk));
      rel = std::abs(g[k + 1]) / bnorm;
      res.report.residual_history.push_back(rel);
      if (rel <= opt.tol) {
        ++k;
        ++total;
        break;
      }
      if (hnext == 0.0) {
        breakdown = true;
        ++k;
        ++total;
        break;
      }
      v.emplace_back(n);
      for (std::size_t i = 0; i < n; ++i) v[k + 1][i] = w[i] / hnext;
    }
    // Back substitution on the k x k triangular system.
    std::vector<double> y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= h[j][i] * y[j];
      y[i] = h[i][i] != 0.0 ? s / h[i][i] : 0.0;
    }
    for (int j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < n; ++i) res.x[i] += y[j] * v[j][i];
    }
    if (rel <= opt.tol || breakdown) break;
  }
  // Recompute the true preconditioned residual for the report.
  a.multiply(res.x, tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = b[i] - tmp[i];
  m.apply(tmp, r);
  res.report.relative_residual = norm2(r) / bnorm;
  res.report.iterations = total;
  res.report.converged = res.report.relative_residual <= opt.tol;
  res.report.solve_seconds = detail::seconds_since(t0);
  return res;
}

/// Preconditioned conjugate gradients on the unpreconditioned relative
/// residual ||b - A x|| / ||b||. Throws on a nonpositive curvature p^T A p.
/// Progress is measured by the energy functional x^T A x / 2 - b^T x, which
/// falls by alpha r^T z / 2 per step; the residual norm itself is not
/// monotone and may spike by orders of magnitude on ill-conditioned systems.
/// The solve stagnates when a full window of iterations lowers the energy
/// by less than a rounding-level fraction of the total decrease.
inline SolveResult cg(const SparseRowMatrix& a, std::span<const double> b, const Preconditioner& m, const KrylovOptions& opt = {}) {
  if (!a.is_square() || a.rows() != b.size()) throw LinalgError("cg: dimension mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  SolveResult res{std::vector<double>(n, 0.0), {}};
  res.report.tolerance = opt.tol;
  const double bnorm = norm2(b);
  if (n == 0 || bnorm == 0.0) {
    res.report.converged = true;
    res.report.residual_history = {0.0};
    return res;
  }
  std::vector<double> r(b.begin(), b.end()), z(n), p(n), q(n);
  m.apply(r, z);
  p = z;
  double rz = dot(r, z);
  double rel = 1.0;
  std::vector<double> decrease;
  double total_decrease = 0.0;
  res.report.residual_history.push_back(rel);
  int it = 0;
  while (it < opt.max_iter && rel > opt.tol) {
    a.multiply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) throw LinalgError("cg: nonpositive curvature p^T A p = " + std::to_string(pq) + "; matrix is not SPD");
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    ++it;
    rel = norm2(r) / bnorm;
    res.report.residual_history.push_back(rel);
    decrease.push_back(alpha * rz);
    total_decrease += alpha * rz;
    if (opt.stagnation_window > 0 && it >= opt.stagnation_window && rel > opt.tol) {
      double recent = 0.0;
      for (int k = it - opt.stagnation_window; k < it; ++k) recent += decrease[k];
      if (recent <= 1e-13 * total_decrease) {
        res.report.stagnated = true;
        break;
      }
    }
    m.apply(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  std::vector<double> ax(n);
  a.multiply(res.x, ax);
  for (std::size_t i = 0; i < n; ++i) ax[i] = b[i] - ax[i];
  res.report.relative_residual = norm2(ax) / bnorm;
  res.report.iterations = it;
  res.report.converged = res.report.relative_residual <= opt.tol;
  res.report.solve_seconds = detail::seconds_since(t0);
  return res;
}

}  // namespace aesfem::linalg

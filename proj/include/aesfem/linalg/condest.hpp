// SPDX-License-Identifier: Apache-2.0
#pragma once

// 1-norm condition estimation (Hager's method with Higham's refinements).

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "aesfem/linalg/sparse.hpp"

namespace aesfem::linalg {

/// Lower-bound estimate of ||B||_1 for an operator available only through
/// products. `apply(x)` overwrites x with B x, `apply_t(x)` with B^T x.
/// Every value returned is ||B x||_1 / ||x||_1 for some probe x.
template <class Apply, class ApplyTransposed>
double estimate_norm1(std::size_t n, Apply&& apply, ApplyTransposed&& apply_t) {
  if (n == 0) return 0.0;
  std::vector<double> x(n, 1.0 / static_cast<double>(n));
  apply(std::span<double>(x));
  double est = 0.0;
  for (double v : x) est += std::abs(v);
  if (n == 1 || !std::isfinite(est)) return est;

  std::vector<double> sign(n), z(n);
  auto sign_of = [](double v) { return v >= 0.0 ? 1.0 : -1.0; };
  for (std::size_t i = 0; i < n; ++i) sign[i] = sign_of(x[i]);
  z = sign;
  apply_t(std::span<double>(z));
  std::size_t j = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(z[i]) > std::abs(z[j])) j = i;
  }

  for (int iter = 0; iter < 5; ++iter) {
    std::fill(x.begin(), x.end(), 0.0);
    x[j] = 1.0;
    apply(std::span<double>(x));
    const double old_est = est;
    double cand = 0.0;
    for (double v : x) cand += std::abs(v);
    est = std::max(est, cand);
    bool same_sign = true;
    for (std::size_t i = 0; i < n; ++i) same_sign = same_sign && sign_of(x[i]) == sign[i];
    if (same_sign || cand <= old_est) break;
    for (std::size_t i = 0; i < n; ++i) sign[i] = sign_of(x[i]);
    z = sign;
    apply_t(std::span<double>(z));
    const std::size_t old_j = j;
    j = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(z[i]) > std::abs(z[j])) j = i;
    }
    if (std::abs(z[j]) <= std::abs(z[old_j])) break;
  }

  // Higham's alternating probe guards against the method's known failures.
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = (i % 2 == 0 ? 1.0 : -1.0) * (1.0 + static_cast<double>(i) / static_cast<double>(n - 1));
  }
  apply(std::span<double>(x));
  double alt = 0.0;
  for (double v : x) alt += std::abs(v);
  alt = 2.0 * alt / (3.0 * static_cast<double>(n));
  return std::max(est, alt);
}

/// Lower bound on kappa_1(A) = ||A||_1 ||A^-1||_1. A^-1 products use a
/// sparse LU factorization. Returns +inf when A is numerically singular.
inline double condest_1norm(const SparseRowMatrix& a) {
  if (!a.is_square()) throw LinalgError("condest requires a square matrix");
  const std::size_t n = a.rows();
  if (n == 0) return 0.0;
  using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor>;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(a.nnz());
  for (std::size_t r = 0; r < n; ++r) {
    const auto idx = a.row_indices(r);
    const auto val = a.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) trips.emplace_back(static_cast<int>(r), idx[k], val[k]);
  }
  SpMat m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) return std::numeric_limits<double>::infinity();

  bool finite = true;
  auto solve = [&](std::span<double> x) {
    Eigen::Map<Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::VectorXd y = lu.solve(v);
    finite = finite && y.allFinite();
    v = y;
  };
  auto solve_t = [&](std::span<double> x) {
    Eigen::Map<Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::VectorXd y = lu.transpose().solve(v);
    finite = finite && y.allFinite();
    v = y;
  };
  double inv_norm = estimate_norm1(n, solve, solve_t);
  if (!finite || !std::isfinite(inv_norm)) return std::numeric_limits<double>::infinity();
  // ||A^-1 a_j||_1 / ||a_j||_1 = 1 / ||a_j||_1 is itself a valid probe.
  const auto cn = a.column_norms1();
  for (double c : cn) {
    if (c > 0.0) inv_norm = std::max(inv_norm, 1.0 / c);
  }
  return a.norm1() * inv_norm;
}

}  // namespace aesfem::linalg

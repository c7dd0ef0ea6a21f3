// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "aesfem/linalg/sparse.hpp"

namespace aesfem::linalg {

/// Approximate inverse action z = M^-1 r.
class Preconditioner {
public:
  virtual ~Preconditioner() = default;
  virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
public:
  void apply(std::span<const double> r, std::span<double> z) const override { std::copy(r.begin(), r.end(), z.begin()); }
};

namespace detail {

/// Row-wise threshold incomplete LU. Entries smaller than droptol times the
/// 2-norm of the original row are dropped (L entries before scaling by the
/// pivot); the diagonal is always kept.
/// L is unit lower triangular (diagonal not stored); U rows start with the
/// diagonal.
struct IlutFactors {
  SparseRowMatrix lower;
  SparseRowMatrix upper;
};

inline IlutFactors ilut_factor(const SparseRowMatrix& a, double droptol) {
  if (!a.is_square()) throw LinalgError("ILU requires a square matrix");
  const std::size_t n = a.rows();
  IlutFactors f{SparseRowMatrix(0, n), SparseRowMatrix(0, n)};
  std::vector<double> w(n, 0.0);
  std::vector<char> in_row(n, 0);
  std::vector<std::int32_t> pattern;
  std::vector<std::int32_t> lcols, ucols;
  std::vector<double> lvals, uvals;

  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = a.row_indices(i);
    const auto val = a.row_values(i);
    const double tau = droptol * norm2(val);
    pattern.clear();
    std::priority_queue<std::int32_t, std::vector<std::int32_t>, std::greater<>> lower_heap;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      w[idx[k]] = val[k];
      in_row[idx[k]] = 1;
      pattern.push_back(idx[k]);
      if (static_cast<std::size_t>(idx[k]) < i) lower_heap.push(idx[k]);
    }
    if (!in_row[i]) {
      in_row[i] = 1;
      w[i] = 0.0;
      pattern.push_back(static_cast<std::int32_t>(i));
    }
    lcols.clear();
    lvals.clear();
    while (!lower_heap.empty()) {
      const std::int32_t k = lower_heap.top();
      lower_heap.pop();
      while (!lower_heap.empty() && lower_heap.top() == k) lower_heap.pop();
      const auto ucol = f.upper.row_indices(k);
      const auto uval = f.upper.row_values(k);
      // Tested before division by the pivot so dropping is invariant to row scaling.
      const double wk = w[k];
      const double lik = wk / uval[0];
      w[k] = 0.0;
      if (std::abs(wk) < tau || wk == 0.0) continue;
      lcols.push_back(k);
      lvals.push_back(lik);
      for (std::size_t p = 1; p < ucol.size(); ++p) {
        const std::int32_t j = ucol[p];
        if (!in_row[j]) {
          in_row[j] = 1;
          w[j] = 0.0;
          pattern.push_back(j);
          if (static_cast<std::size_t>(j) < i) lower_heap.push(j);
        }
        w[j] -= lik * uval[p];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    ucols.clear();
    uvals.clear();
    ucols.push_back(static_cast<std::int32_t>(i));
    uvals.push_back(w[i]);
    for (std::int32_t j : pattern) {
      if (static_cast<std::size_t>(j) > i && (std::abs(w[j]) >= tau && w[j] != 0.0)) {
        ucols.push_back(j);
        uvals.push_back(w[j]);
      }
      w[j] = 0.0;
      in_row[j] = 0;
    }
    if (uvals[0] == 0.0 || !std::isfinite(uvals[0])) {
      throw LinalgError("zero pivot in incomplete factorization at row " + std::to_string(i) +
                        "; try a smaller drop tolerance, a larger stencil, or a diagonal shift");
    }
    // lcols ascend because the heap pops in order.
    f.lower.push_row(lcols, lvals);
    f.upper.push_row(ucols, uvals);
  }
  return f;
}

}  // namespace detail

/// Threshold ILU (ILUT without a fill cap).
class IlutPreconditioner final : public Preconditioner {
public:
  IlutPreconditioner(const SparseRowMatrix& a, double droptol) : factors_(detail::ilut_factor(a, droptol)) {}

  void apply(std::span<const double> r, std::span<double> z) const override {
    const std::size_t n = r.size();
    for (std::size_t i = 0; i < n; ++i) {
      double s = r[i];
      const auto idx = factors_.lower.row_indices(i);
      const auto val = factors_.lower.row_values(i);
      for (std::size_t k = 0; k < idx.size(); ++k) s -= val[k] * z[idx[k]];
      z[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
      const auto idx = factors_.upper.row_indices(ii);
      const auto val = factors_.upper.row_values(ii);
      double s = z[ii];
      for (std::size_t k = 1; k < idx.size(); ++k) s -= val[k] * z[idx[k]];
      z[ii] = s / val[0];
    }
  }

  [[nodiscard]] const SparseRowMatrix& lower() const { return factors_.lower; }
  [[nodiscard]] const SparseRowMatrix& upper() const { return factors_.upper; }
  [[nodiscard]] std::size_t fill() const { return factors_.lower.nnz() + factors_.upper.nnz(); }

private:
  detail::IlutFactors factors_;
};

/// One forward Gauss-Seidel sweep: z = (D + L)^-1 r.
class GaussSeidelPreconditioner final : public Preconditioner {
public:
  explicit GaussSeidelPreconditioner(const SparseRowMatrix& a) : a_(a), diag_(a.diagonal()) {
    if (!a.is_square()) throw LinalgError("Gauss-Seidel requires a square matrix");
    for (std::size_t i = 0; i < diag_.size(); ++i) {
      if (diag_[i] == 0.0) throw LinalgError("zero diagonal entry at row " + std::to_string(i) + " in Gauss-Seidel preconditioner");
    }
  }

  void apply(std::span<const double> r, std::span<double> z) const override {
    for (std::size_t i = 0; i < diag_.size(); ++i) {
      double s = r[i];
      const auto idx = a_.row_indices(i);
      const auto val = a_.row_values(i);
      for (std::size_t k = 0; k < idx.size() && static_cast<std::size_t>(idx[k]) < i; ++k) s -= val[k] * z[idx[k]];
      z[i] = s / diag_[i];
    }
  }

private:
  SparseRowMatrix a_;
  std::vector<double> diag_;
};

/// Threshold incomplete Cholesky M = R^T R, with R = D^-1/2 U taken from the
/// threshold ILU of a symmetric positive definite matrix.
class IncompleteCholeskyPreconditioner final : public Preconditioner {
public:
  IncompleteCholeskyPreconditioner(const SparseRowMatrix& a, double droptol) {
    auto f = detail::ilut_factor(a, droptol);
    const auto& u = f.upper;
    std::vector<std::int64_t> offsets = u.offsets();
    std::vector<std::int32_t> indices = u.indices();
    std::vector<double> values = u.values();
    for (std::size_t i = 0; i < u.rows(); ++i) {
      const double d = values[offsets[i]];
      if (!(d > 0.0)) {
        throw LinalgError("nonpositive pivot " + std::to_string(d) + " at row " + std::to_string(i) + " in incomplete Cholesky; matrix may be indefinite");
      }
      const double s = 1.0 / std::sqrt(d);
      for (auto k = offsets[i]; k < offsets[i + 1]; ++k) values[k] *= s;
    }
    factor_ = SparseRowMatrix::from_csr(u.rows(), u.cols(), std::move(offsets), std::move(indices), std::move(values));
  }

  void apply(std::span<const double> r, std::span<double> z) const override {
    const std::size_t n = r.size();
    // R^T y = r, processed column-wise over the rows of R.
    std::copy(r.begin(), r.end(), z.begin());
    for (std::size_t i = 0; i < n; ++i) {
      const auto idx = factor_.row_indices(i);
      const auto val = factor_.row_values(i);
      z[i] /= val[0];
      for (std::size_t k = 1; k < idx.size(); ++k) z[idx[k]] -= val[k] * z[i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
      const auto idx = factor_.row_indices(ii);
      const auto val = factor_.row_values(ii);
      double s = z[ii];
      for (std::size_t k = 1; k < idx.size(); ++k) s -= val[k] * z[idx[k]];
      z[ii] = s / val[0];
    }
  }

  [[nodiscard]] const SparseRowMatrix& factor() const { return factor_; }

private:
  SparseRowMatrix factor_;
};

inline std::unique_ptr<Preconditioner> ilu(const SparseRowMatrix& a, double droptol) { return std::make_unique<IlutPreconditioner>(a, droptol); }

inline std::unique_ptr<Preconditioner> gauss_seidel_preconditioner(const SparseRowMatrix& a) { return std::make_unique<GaussSeidelPreconditioner>(a); }

inline std::unique_ptr<Preconditioner> incomplete_cholesky(const SparseRowMatrix& a, double droptol) {
  return std::make_unique<IncompleteCholeskyPreconditioner>(a, droptol);
}

}  // namespace aesfem::linalg

// SPDX-License-Identifier: Apache-2.0
#pragma once

// Test-side oracles: dense Eigen conversions and exact condition numbers.

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "aesfem/linalg/sparse.hpp"

namespace aesfem::test {

inline Eigen::MatrixXd to_dense(const linalg::SparseRowMatrix& a) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto idx = a.row_indices(r);
    const auto val = a.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) d(static_cast<Eigen::Index>(r), idx[k]) = val[k];
  }
  return d;
}

inline linalg::SparseRowMatrix from_dense(const Eigen::MatrixXd& d, double drop = 0.0) {
  std::vector<linalg::Triplet> t;
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    for (Eigen::Index c = 0; c < d.cols(); ++c) {
      if (std::abs(d(r, c)) > drop) t.push_back({static_cast<std::int32_t>(r), static_cast<std::int32_t>(c), d(r, c)});
    }
  }
  return linalg::SparseRowMatrix::from_triplets(static_cast<std::size_t>(d.rows()), static_cast<std::size_t>(d.cols()), std::move(t));
}

inline double norm1(const Eigen::MatrixXd& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

inline double exact_kappa1(const Eigen::MatrixXd& a) { return norm1(a) * norm1(a.inverse()); }

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())); }

/// Sparse, diagonally dominant nonsymmetric matrix.
inline Eigen::MatrixXd random_sparse_dominant(int n, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), p(0.0, 1.0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && p(rng) < density) a(i, j) = u(rng);
    }
    a(i, i) = a.row(i).cwiseAbs().sum() + 0.5 + p(rng);
  }
  return a;
}

}  // namespace aesfem::test

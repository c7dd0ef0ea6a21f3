// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aesfem::linalg {

class LinalgError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Triplet {
  std::int32_t row;
  std::int32_t col;
  double value;
};

/// Compressed sparse row matrix. Column indices are strictly ascending
/// within each row.
class SparseRowMatrix {
public:
  SparseRowMatrix() = default;
  SparseRowMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), offsets_(rows + 1, 0) {}

  /// Duplicate entries are summed.
  static SparseRowMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    SparseRowMatrix m(rows, cols);
    m.indices_.reserve(triplets.size());
    m.values_.reserve(triplets.size());
    for (std::size_t k = 0; k < triplets.size();) {
      const auto& t = triplets[k];
      if (t.row < 0 || static_cast<std::size_t>(t.row) >= rows || t.col < 0 || static_cast<std::size_t>(t.col) >= cols) {
        throw LinalgError("triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) + ") out of range");
      }
      double sum = 0.0;
      std::size_t j = k;
      while (j < triplets.size() && triplets[j].row == t.row && triplets[j].col == t.col) sum += triplets[j++].value;
      m.indices_.push_back(t.col);
      m.values_.push_back(sum);
      ++m.offsets_[t.row + 1];
      k = j;
    }
    for (std::size_t r = 0; r < rows; ++r) m.offsets_[r + 1] += m.offsets_[r];
    return m;
  }

  /// Appends a row; `cols` must be strictly ascending.
  void push_row(std::span<const std::int32_t> cols, std::span<const double> vals) {
    assert(cols.size() == vals.size());
    indices_.insert(indices_.end(), cols.begin(), cols.end());
    values_.insert(values_.end(), vals.begin(), vals.end());
    if (offsets_.empty()) offsets_.push_back(0);
    offsets_.push_back(static_cast<std::int64_t>(indices_.size()));
    rows_ = offsets_.size() - 1;
  }

  static SparseRowMatrix from_csr(std::size_t rows, std::size_t cols, std::vector<std::int64_t> offsets, std::vector<std::int32_t> indices,
                                  std::vector<double> values) {
    SparseRowMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.offsets_ = std::move(offsets);
    m.indices_ = std::move(indices);
    m.values_ = std::move(values);
    m.validate();
    return m;
  }

  static SparseRowMatrix identity(std::size_t n) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(i), 1.0});
    return from_triplets(n, n, std::move(t));
  }

  void validate() const {
    if (offsets_.size() != rows_ + 1 || offsets_.front() != 0 || static_cast<std::size_t>(offsets_.back()) != indices_.size() ||
        indices_.size() != values_.size()) {
      throw LinalgError("inconsistent CSR arrays");
    }
    for (std::size_t r = 0; r < rows_; ++r) {
      if (offsets_[r] > offsets_[r + 1]) throw LinalgError("row offsets not monotone at row " + std::to_string(r));
      for (auto k = offsets_[r]; k < offsets_[r + 1]; ++k) {
        if (indices_[k] < 0 || static_cast<std::size_t>(indices_[k]) >= cols_) throw LinalgError("column index out of range in row " + std::to_string(r));
        if (k > offsets_[r] && indices_[k] <= indices_[k - 1]) throw LinalgError("column indices not ascending in row " + std::to_string(r));
      }
    }
  }

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] std::size_t nnz() const { return values_.size(); }
  [[nodiscard]] bool is_square() const { return rows_ == cols_; }
  [[nodiscard]] const std::vector<std::int64_t>& offsets() const { return offsets_; }
  [[nodiscard]] const std::vector<std::int32_t>& indices() const { return indices_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }

  [[nodiscard]] std::span<const std::int32_t> row_indices(std::size_t r) const {
    return {indices_.data() + offsets_[r], static_cast<std::size_t>(offsets_[r + 1] - offsets_[r])};
  }
  [[nodiscard]] std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + offsets_[r], static_cast<std::size_t>(offsets_[r + 1] - offsets_[r])};
  }

  [[nodiscard]] double coeff(std::size_t r, std::size_t c) const {
    const auto idx = row_indices(r);
    auto it = std::lower_bound(idx.begin(), idx.end(), static_cast<std::int32_t>(c));
    return (it != idx.end() && static_cast<std::size_t>(*it) == c) ? row_values(r)[it - idx.begin()] : 0.0;
  }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t r = 0; r < rows_; ++r) {
      double s = 0.0;
      for (auto k = offsets_[r]; k < offsets_[r + 1]; ++k) s += values_[k] * x[indices_[k]];
      y[r] = s;
    }
  }

  [[nodiscard]] std::vector<double> operator*(std::span<const double> x) const {
    std::vector<double> y(rows_);
    multiply(x, y);
    return y;
  }

  /// y = A^T x
  void multiply_transpose(std::span<const double> x, std::span<double> y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (auto k = offsets_[r]; k < offsets_[r + 1]; ++k) y[indices_[k]] += values_[k] * x[r];
    }
  }

  [[nodiscard]] SparseRowMatrix transpose() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t r = 0; r < rows_; ++r) {
      for (auto k = offsets_[r]; k < offsets_[r + 1]; ++k) t.push_back({indices_[k], static_cast<std::int32_t>(r), values_[k]});
    }
    return from_triplets(cols_, rows_, std::move(t));
  }

  /// Maximum absolute column sum.
  [[nodiscard]] double norm1() const {
    std::vector<double> colsum(cols_, 0.0);
    for (std::size_t k = 0; k < values_.size(); ++k) colsum[indices_[k]] += std::abs(values_[k]);
    return colsum.empty() ? 0.0 : *std::max_element(colsum.begin(), colsum.end());
  }

  [[nodiscard]] std::vector<double> column_norms1() const {
    std::vector<double> colsum(cols_, 0.0);
    for (std::size_t k = 0; k < values_.size(); ++k) colsum[indices_[k]] += std::abs(values_[k]);
    return colsum;
  }

  [[nodiscard]] std::vector<double> diagonal() const {
    std::vector<double> d(std::min(rows_, cols_), 0.0);
    for (std::size_t r = 0; r < d.size(); ++r) d[r] = coeff(r, r);
    return d;
  }

  /// max |A - A^T| over all entries.
  [[nodiscard]] double asymmetry() const {
    double worst = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      for (auto k = offsets_[r]; k < offsets_[r + 1]; ++k) worst = std::max(worst, std::abs(values_[k] - coeff(indices_[k], r)));
    }
    return worst;
  }

  friend bool operator==(const SparseRowMatrix&, const SparseRowMatrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::int64_t> offsets_{0};
  std::vector<std::int32_t> indices_;
  std::vector<double> values_;
};

inline double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

}  // namespace aesfem::linalg

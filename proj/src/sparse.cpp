#include "gst/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gst/error.hpp"
#include "gst/kernels.hpp"

namespace gst {

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries,
                                         bool symmetric) {
  for (const Triplet& t : entries) {
    if (t.row < 0 || t.col < 0 || static_cast<std::size_t>(t.row) >= rows ||
        static_cast<std::size_t>(t.col) >= cols)
      fail_config("sparse index (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                  ") out of range for " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t e = 1; e < entries.size(); ++e) {
    if (entries[e].row == entries[e - 1].row && entries[e].col == entries[e - 1].col)
      fail_config("duplicate sparse entry (" + std::to_string(entries[e].row) + "," +
                  std::to_string(entries[e].col) + ")");
  }
  SparseMatrix m(rows, cols);
  m.symmetric_ = symmetric;
  m.row_.reserve(entries.size());
  m.col_.reserve(entries.size());
  m.values_.reserve(entries.size());
  for (const Triplet& t : entries) {
    m.row_.push_back(t.row);
    m.col_.push_back(t.col);
    m.values_.push_back(t.value);
  }
  if (symmetric) {
    if (rows != cols) fail_config("symmetric sparse matrix must be square");
    for (const Triplet& t : entries) {
      auto it = std::lower_bound(entries.begin(), entries.end(), Triplet{t.col, t.row, 0.0},
                                 [](const Triplet& a, const Triplet& b) {
                                   return a.row != b.row ? a.row < b.row : a.col < b.col;
                                 });
      if (it == entries.end() || it->row != t.col || it->col != t.row || it->value != t.value)
        fail_config("sparse matrix flagged symmetric lacks mirror of (" + std::to_string(t.row) + "," +
                    std::to_string(t.col) + ")");
    }
  }
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> e;
  e.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    e.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(i), 1.0});
  return from_triplets(n, n, std::move(e), true);
}

SparseMatrix SparseMatrix::from_dense(const Tensor& dense, double drop_below) {
  std::vector<Triplet> e;
  for (std::size_t i = 0; i < dense.rows(); ++i)
    for (std::size_t j = 0; j < dense.cols(); ++j)
      if (std::abs(dense(i, j)) > drop_below)
        e.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(j), dense(i, j)});
  return from_triplets(dense.rows(), dense.cols(), std::move(e));
}

Tensor SparseMatrix::to_dense() const {
  Tensor d = Tensor::zeros(rows_, cols_);
  for (std::size_t e = 0; e < values_.size(); ++e) d(row_[e], col_[e]) = values_[e];
  return d;
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<Triplet> e;
  e.reserve(values_.size());
  for (std::size_t k = 0; k < values_.size(); ++k) e.push_back({col_[k], row_[k], values_[k]});
  return from_triplets(cols_, rows_, std::move(e), symmetric_);
}

std::vector<double> SparseMatrix::row_sums() const {
  std::vector<double> s(rows_, 0.0);
  for (std::size_t e = 0; e < values_.size(); ++e) s[row_[e]] += values_[e];
  return s;
}

Tensor spmv(const SparseMatrix& m, const Tensor& x) {
  if (x.rows() != m.cols())
    fail_config("spmv: matrix has " + std::to_string(m.cols()) + " cols, operand " + x.shape_string());
  const std::size_t width = x.cols();
  Tensor y = Tensor::zeros(m.rows(), width);
  kernels::coo_spmm_acc(kernels::active(), m.row_indices(), m.col_indices(), m.values(), width, x.data(),
                        y.data());
  return y;
}

Tensor spmv_transposed(const SparseMatrix& m, const Tensor& x) {
  if (x.rows() != m.rows())
    fail_config("spmv_transposed: matrix has " + std::to_string(m.rows()) + " rows, operand " +
                x.shape_string());
  const std::size_t width = x.cols();
  Tensor y = Tensor::zeros(m.cols(), width);
  kernels::coo_spmm_t_acc(kernels::active(), m.row_indices(), m.col_indices(), m.values(), width,
                          x.data(), y.data());
  return y;
}

}  // namespace gst

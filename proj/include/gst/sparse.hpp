#pragma once

#include <cstdint>
#include <vector>

#include "gst/tensor.hpp"

namespace gst {

struct Triplet {
  std::int64_t row;
  std::int64_t col;
  double value;
};

// COO sparse matrix. Entries are kept sorted by (row, col) with no duplicates;
// a symmetric matrix stores both (i,j) and (j,i).
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

  // Validates indices, rejects duplicates, sorts. When `symmetric` is set the
  // mirror of every entry must be present with an equal value.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries,
                                    bool symmetric = false);
  static SparseMatrix identity(std::size_t n);
  static SparseMatrix from_dense(const Tensor& dense, double drop_below = 0.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }
  bool symmetric() const noexcept { return symmetric_; }

  const std::vector<std::int64_t>& row_indices() const noexcept { return row_; }
  const std::vector<std::int64_t>& col_indices() const noexcept { return col_; }
  const std::vector<double>& values() const noexcept { return values_; }

  Tensor to_dense() const;
  SparseMatrix transposed() const;
  std::vector<double> row_sums() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  bool symmetric_ = false;
  std::vector<std::int64_t> row_;
  std::vector<std::int64_t> col_;
  std::vector<double> values_;
};

// m * x where x has m.cols() rows and any number of columns.
Tensor spmv(const SparseMatrix& m, const Tensor& x);
// m^T * x.
Tensor spmv_transposed(const SparseMatrix& m, const Tensor& x);

}  // namespace gst

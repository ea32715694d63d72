#pragma once

#include <cstdint>
#include <vector>

#include "tensor/tensor.hpp"

namespace amc::nn {

// Compressed sparse row matrix backing pruned dense layers.
// Invariants: row_ptr is monotone with row_ptr[rows] == nnz, and column
// indices are strictly increasing within each row. Checked on construction.
struct CsrMatrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint64_t> row_ptr;
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }

  void validate() const;

  // Entries with magnitude exactly zero are dropped.
  static CsrMatrix from_dense(const double* w, std::size_t rows, std::size_t cols);
  static CsrMatrix from_dense(const Tensor& w);

  Tensor to_dense() const;

  // y[B x cols] = x[B x rows] * W + bias; rows of W are visited in
  // ascending order so the accumulation order is deterministic.
  Tensor multiply_left(const Tensor& x, const std::vector<double>& bias) const;
};

std::vector<std::uint8_t> csr_to_blob(const CsrMatrix& m);
CsrMatrix csr_from_blob(const std::uint8_t* data, std::size_t n);

}  // namespace amc::nn

#include "models/sparse.hpp"

#include "core/bytes.hpp"

namespace amc::nn {

void CsrMatrix::validate() const {
  if (row_ptr.size() != static_cast<std::size_t>(rows) + 1) {
    throw FormatError("csr: row_ptr length mismatch");
  }
  if (row_ptr.front() != 0 || row_ptr.back() != values.size() ||
      col_idx.size() != values.size()) {
    throw FormatError("csr: nnz bookkeeping mismatch");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_ptr[r] > row_ptr[r + 1]) throw FormatError("csr: row_ptr not monotone");
    for (std::uint64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      if (col_idx[k] >= cols) throw FormatError("csr: column index out of range");
      if (k > row_ptr[r] && col_idx[k] <= col_idx[k - 1]) {
        throw FormatError("csr: column indices not strictly increasing");
      }
    }
  }
}

CsrMatrix CsrMatrix::from_dense(const double* w, std::size_t rows, std::size_t cols) {
  CsrMatrix m;
  m.rows = static_cast<std::uint32_t>(rows);
  m.cols = static_cast<std::uint32_t>(cols);
  m.row_ptr.reserve(rows + 1);
  m.row_ptr.push_back(0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = w[r * cols + c];
      if (v != 0.0) {
        m.col_idx.push_back(static_cast<std::uint32_t>(c));
        m.values.push_back(v);
      }
    }
    m.row_ptr.push_back(m.values.size());
  }
  return m;
}

CsrMatrix CsrMatrix::from_dense(const Tensor& w) {
  if (w.rank() != 2) throw DimensionError("csr: expected a 2-D tensor");
  return from_dense(w.data(), w.dim(0), w.dim(1));
}

Tensor CsrMatrix::to_dense() const {
  Tensor out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::uint64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      out.data()[r * cols + col_idx[k]] = values[k];
    }
  }
  return out;
}

Tensor CsrMatrix::multiply_left(const Tensor& x, const std::vector<double>& bias) const {
  if (x.rank() != 2 || x.dim(1) != rows) {
    throw DimensionError("csr multiply: input " + Tensor::shape_str(x.shape()) +
                         " does not match " + std::to_string(rows) + " rows");
  }
  if (bias.size() != cols) throw DimensionError("csr multiply: bias length mismatch");
  const std::size_t batch = x.dim(0);
  Tensor y({batch, cols});
  for (std::size_t b = 0; b < batch; ++b) {
    double* yrow = y.data() + b * cols;
    for (std::size_t c = 0; c < cols; ++c) yrow[c] = bias[c];
    const double* xrow = x.data() + b * rows;
    for (std::size_t r = 0; r < rows; ++r) {
      const double xv = xrow[r];
      if (xv == 0.0) continue;
      for (std::uint64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
        yrow[col_idx[k]] += xv * values[k];
      }
    }
  }
  return y;
}

std::vector<std::uint8_t> csr_to_blob(const CsrMatrix& m) {
  m.validate();
  ByteWriter w;
  w.magic("CSRW");
  w.u16(1);
  w.u32(m.rows);
  w.u32(m.cols);
  w.u64(m.values.size());
  w.raw(m.row_ptr.data(), m.row_ptr.size() * sizeof(std::uint64_t));
  w.raw(m.col_idx.data(), m.col_idx.size() * sizeof(std::uint32_t));
  w.raw(m.values.data(), m.values.size() * sizeof(double));
  return w.bytes();
}

CsrMatrix csr_from_blob(const std::uint8_t* data, std::size_t n) {
  ByteReader r(data, n);
  r.expect_magic("CSRW", "sparse blob");
  if (r.u16() != 1) throw FormatError("sparse blob: unsupported version");
  CsrMatrix m;
  m.rows = r.u32();
  m.cols = r.u32();
  const std::uint64_t nnz = r.u64();
  m.row_ptr.resize(static_cast<std::size_t>(m.rows) + 1);
  m.col_idx.resize(nnz);
  m.values.resize(nnz);
  r.raw(m.row_ptr.data(), m.row_ptr.size() * sizeof(std::uint64_t));
  r.raw(m.col_idx.data(), m.col_idx.size() * sizeof(std::uint32_t));
  r.raw(m.values.data(), m.values.size() * sizeof(double));
  r.expect_end("sparse blob");
  m.validate();
  return m;
}

}  // namespace amc::nn

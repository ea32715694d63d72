#pragma once

#include <cstdint>
#include <vector>

#include "tensor/tensor.hpp"

namespace amc::nn {

// Product-quantization codebook replacing an FC weight matrix W[M x N]:
// per-subspace centroid tables plus one code per (row, subspace).
struct PQCodebook {
  std::uint32_t rows = 0;            // M
  std::uint32_t cols = 0;            // N
  std::uint16_t num_subspaces = 0;   // P
  std::uint16_t num_centroids = 0;   // K_s
  std::vector<double> centroids;     // [P][K_s][d], d = N/P
  std::vector<std::uint16_t> codes;  // [M][P], each < K_s

  std::size_t subdim() const { return cols / num_subspaces; }
  int bit_width() const;

  void validate() const;

  const double* centroid(std::size_t subspace, std::size_t index) const {
    return centroids.data() + (subspace * num_centroids + index) * subdim();
  }

  // w_hat[z] = concat_i centroids[i][codes[z][i]]
  Tensor reconstruct() const;
};

// "PQCB" blob: magic, u16 version, u32 M, u32 N, u16 P, u16 K_s,
// centroids f64 LE (P*K_s*d), codes LE (M*P) as u8 when K_s <= 256 else u16.
std::vector<std::uint8_t> codebook_to_blob(const PQCodebook& cb);
PQCodebook codebook_from_blob(const std::uint8_t* data, std::size_t n);

}  // namespace amc::nn

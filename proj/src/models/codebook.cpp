#include "models/codebook.hpp"

#include <cstring>

#include "core/bytes.hpp"

namespace amc::nn {

int PQCodebook::bit_width() const {
  int bits = 0;
  while ((1u << bits) < num_centroids) ++bits;
  return bits;
}

void PQCodebook::validate() const {
  if (rows == 0 || cols == 0 || num_subspaces == 0 || num_centroids == 0) {
    throw FormatError("pq codebook: empty dimensions");
  }
  if (cols % num_subspaces != 0) {
    throw FormatError("pq codebook: cols not divisible by subspace count");
  }
  const std::size_t d = subdim();
  if (centroids.size() !=
      static_cast<std::size_t>(num_subspaces) * num_centroids * d) {
    throw FormatError("pq codebook: centroid table size mismatch");
  }
  if (codes.size() != static_cast<std::size_t>(rows) * num_subspaces) {
    throw FormatError("pq codebook: code matrix size mismatch");
  }
  for (std::uint16_t c : codes) {
    if (c >= num_centroids) throw FormatError("pq codebook: code out of range");
  }
}

Tensor PQCodebook::reconstruct() const {
  validate();
  const std::size_t d = subdim();
  Tensor w({rows, cols});
  for (std::size_t z = 0; z < rows; ++z) {
    double* row = w.data() + z * cols;
    for (std::size_t i = 0; i < num_subspaces; ++i) {
      const std::uint16_t code = codes[z * num_subspaces + i];
      std::memcpy(row + i * d, centroid(i, code), d * sizeof(double));
    }
  }
  return w;
}

std::vector<std::uint8_t> codebook_to_blob(const PQCodebook& cb) {
  cb.validate();
  ByteWriter w;
  w.magic("PQCB");
  w.u16(1);
  w.u32(cb.rows);
  w.u32(cb.cols);
  w.u16(cb.num_subspaces);
  w.u16(cb.num_centroids);
  w.raw(cb.centroids.data(), cb.centroids.size() * sizeof(double));
  if (cb.num_centroids <= 256) {
    for (std::uint16_t c : cb.codes) w.u8(static_cast<std::uint8_t>(c));
  } else {
    w.raw(cb.codes.data(), cb.codes.size() * sizeof(std::uint16_t));
  }
  return w.bytes();
}

PQCodebook codebook_from_blob(const std::uint8_t* data, std::size_t n) {
  ByteReader r(data, n);
  r.expect_magic("PQCB", "pq blob");
  if (r.u16() != 1) throw FormatError("pq blob: unsupported version");
  PQCodebook cb;
  cb.rows = r.u32();
  cb.cols = r.u32();
  cb.num_subspaces = r.u16();
  cb.num_centroids = r.u16();
  if (cb.num_subspaces == 0 || cb.cols % cb.num_subspaces != 0) {
    throw FormatError("pq blob: invalid subspace partition");
  }
  const std::size_t d = cb.cols / cb.num_subspaces;
  cb.centroids.resize(static_cast<std::size_t>(cb.num_subspaces) * cb.num_centroids * d);
  r.raw(cb.centroids.data(), cb.centroids.size() * sizeof(double));
  cb.codes.resize(static_cast<std::size_t>(cb.rows) * cb.num_subspaces);
  if (cb.num_centroids <= 256) {
    for (auto& c : cb.codes) c = r.u8();
  } else {
    r.raw(cb.codes.data(), cb.codes.size() * sizeof(std::uint16_t));
  }
  r.expect_end("pq blob");
  cb.validate();
  return cb;
}

}  // namespace amc::nn

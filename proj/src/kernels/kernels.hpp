#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace amc::kern {

// Data-parallel inner loops behind the tensor engine, the ADMM solver and
// the k-means scans. Several backends implement the same table: a scalar
// reference plus SIMD variants (AVX2 on x86-64, NEON on aarch64) selected
// once at startup.
//
// Bit-exactness contract: every backend must produce output bit-identical
// to the scalar reference. SIMD variants therefore vectorize only across
// independent output elements; each output element's reduction runs
// sequentially in ascending index order, and fused multiply-add is never
// used (the build disables FP contraction). The equivalence tests compare
// backends with memcmp.
//
// All matrices are dense row-major f64. The gemm variants accumulate
// (c += ...); callers zero c when they want a plain product.
struct Backend {
  const char* name;

  // c[m x n] += a[m x k] * b[k x n]
  void (*gemm_nn)(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n);
  // c[m x n] += a^T * b with a[k x m], b[k x n]
  void (*gemm_tn)(const double* a, const double* b, double* c,
                  std::size_t k, std::size_t m, std::size_t n);
  // c[m x n] += a * b^T with a[m x k], b[n x k]
  void (*gemm_nt)(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n);

  // y[i] = max(x[i], 0)
  void (*relu)(const double* x, double* y, std::size_t n);
  // gx[i] = gx[i] + (x[i] > 0 ? gy[i] : 0.0)
  void (*relu_bwd)(const double* x, const double* gy, double* gx, std::size_t n);
  // c[i] = a[i] + b[i] / a[i] - b[i] / a[i] * b[i]
  void (*add)(const double* a, const double* b, double* c, std::size_t n);
  void (*sub)(const double* a, const double* b, double* c, std::size_t n);
  void (*mul)(const double* a, const double* b, double* c, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[i] = alpha * x[i]
  void (*scale)(const double* x, double alpha, double* y, std::size_t n);
  // y[i] = sign(x[i]) * max(|x[i]| - tau, 0); exact zero where shrunk out
  void (*soft_threshold)(const double* x, double tau, double* y, std::size_t n);
  // One Adam update over n parameters. bc1/bc2 are the bias corrections
  // (1 - beta1^t), (1 - beta2^t).
  void (*adam_step)(double* w, double* m, double* v, const double* g,
                    std::size_t n, double lr, double beta1, double beta2,
                    double eps, double bc1, double bc2);
  // Squared Euclidean distance of query q[d] to k centroids stored
  // transposed: ct[d x k] row-major (ct[dim * k + j] = centroid j, dim).
  void (*l2sq_scan)(const double* q, const double* ct,
                    std::size_t k, std::size_t d, double* out);
};

// Active backend: best SIMD variant the CPU supports, unless overridden by
// the AMC_KERNELS environment variable ("scalar", "avx2", "neon").
const Backend& backend();

const Backend& scalar_backend();

// Backends usable on this machine.
std::vector<const Backend*> available_backends();

// Force a specific backend (tests); returns false if unknown/unavailable.
bool set_backend(std::string_view name);

// Scratch helper shared by gemm_nt implementations and the tensor engine:
// dst[cols x rows] = src[rows x cols]^T. Pure element moves, so it is
// trivially bit-exact.
void transpose(const double* src, double* dst, std::size_t rows, std::size_t cols);

}  // namespace amc::kern

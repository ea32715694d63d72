// AVX2 backend. Lanes map to distinct output elements; reductions stay
// sequential per element, and mul/add are kept separate so every result is
// bit-identical to the scalar reference.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <vector>

#include "core/threads.hpp"
#include "kernels/kernels.hpp"

namespace amc::kern {
namespace {

constexpr std::size_t kRowGrain = 8;
constexpr std::size_t kEltGrain = 1 << 14;

// crow[0..n) += av * brow[0..n)
inline void axpy_row(double* crow, const double* brow, double av, std::size_t n) {
  const __m256d avv = _mm256_set1_pd(av);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d prod = _mm256_mul_pd(avv, _mm256_loadu_pd(brow + j));
    _mm256_storeu_pd(crow + j, _mm256_add_pd(_mm256_loadu_pd(crow + j), prod));
  }
  for (; j < n; ++j) crow[j] = crow[j] + av * brow[j];
}

// Four consecutive reduction steps fused into one pass over the c row. The
// adds chain in ascending t order per element, so the result is bit-identical
// to four axpy_row calls while loading/storing c only once.
inline void axpy_row4(double* crow, const double* b0, const double* b1,
                      const double* b2, const double* b3, const double* a4,
                      std::size_t n) {
  const __m256d a0 = _mm256_set1_pd(a4[0]);
  const __m256d a1 = _mm256_set1_pd(a4[1]);
  const __m256d a2 = _mm256_set1_pd(a4[2]);
  const __m256d a3 = _mm256_set1_pd(a4[3]);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d acc = _mm256_loadu_pd(crow + j);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(a0, _mm256_loadu_pd(b0 + j)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(a1, _mm256_loadu_pd(b1 + j)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(a2, _mm256_loadu_pd(b2 + j)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(a3, _mm256_loadu_pd(b3 + j)));
    _mm256_storeu_pd(crow + j, acc);
  }
  for (; j < n; ++j) {
    double s = crow[j];
    s = s + a4[0] * b0[j];
    s = s + a4[1] * b1[j];
    s = s + a4[2] * b2[j];
    s = s + a4[3] * b3[j];
    crow[j] = s;
  }
}

inline void row_product(double* crow, const double* b, std::size_t ldb,
                        const double* avals, std::size_t k, std::size_t n) {
  std::size_t t = 0;
  for (; t + 4 <= k; t += 4) {
    axpy_row4(crow, b + t * ldb, b + (t + 1) * ldb, b + (t + 2) * ldb,
              b + (t + 3) * ldb, avals + t, n);
  }
  for (; t < k; ++t) axpy_row(crow, b + t * ldb, avals[t], n);
}

// Blocks of four output rows share each pass over the b rows, keeping them
// hot in L1. Every c element still accumulates in ascending t order.
inline void rows_product(double* c, std::size_t ldc, const double* a,
                         std::size_t lda, const double* b, std::size_t ldb,
                         std::size_t rows, std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    std::size_t t = 0;
    for (; t + 4 <= k; t += 4) {
      const double* b0 = b + t * ldb;
      const double* b1 = b + (t + 1) * ldb;
      const double* b2 = b + (t + 2) * ldb;
      const double* b3 = b + (t + 3) * ldb;
      for (std::size_t di = 0; di < 4; ++di) {
        axpy_row4(c + (i + di) * ldc, b0, b1, b2, b3, a + (i + di) * lda + t, n);
      }
    }
    for (; t < k; ++t) {
      for (std::size_t di = 0; di < 4; ++di) {
        axpy_row(c + (i + di) * ldc, b + t * ldb, a[(i + di) * lda + t], n);
      }
    }
  }
  for (; i < rows; ++i) row_product(c + i * ldc, b, ldb, a + i * lda, k, n);
}

void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
  parallel_for(m, kRowGrain, [=](std::size_t i0, std::size_t i1) {
    rows_product(c + i0 * n, n, a + i0 * k, k, b, n, i1 - i0, k, n);
  });
}

void gemm_tn(const double* a, const double* b, double* c,
             std::size_t k, std::size_t m, std::size_t n) {
  // Gather strided a columns into a contiguous pack per row block.
  parallel_for(m, kRowGrain, [=](std::size_t i0, std::size_t i1) {
    std::vector<double> pack(4 * k);
    std::size_t i = i0;
    for (; i + 4 <= i1; i += 4) {
      for (std::size_t t = 0; t < k; ++t) {
        pack[t] = a[t * m + i];
        pack[k + t] = a[t * m + i + 1];
        pack[2 * k + t] = a[t * m + i + 2];
        pack[3 * k + t] = a[t * m + i + 3];
      }
      rows_product(c + i * n, n, pack.data(), k, b, n, 4, k, n);
    }
    for (; i < i1; ++i) {
      for (std::size_t t = 0; t < k; ++t) pack[t] = a[t * m + i];
      row_product(c + i * n, b, n, pack.data(), k, n);
    }
  });
}

void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
  // b[n x k] is transposed once so the inner loop can run j-vectorized with
  // the same per-element add order as the scalar dot product.
  std::vector<double> bt(k * n);
  transpose(b, bt.data(), n, k);
  const double* btp = bt.data();
  parallel_for(m, kRowGrain, [=](std::size_t i0, std::size_t i1) {
    rows_product(c + i0 * n, n, a + i0 * k, k, btp, n, i1 - i0, k, n);
  });
}

void relu(const double* x, double* y, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = i0;
    for (; i + 4 <= i1; i += 4) {
      _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    }
    for (; i < i1; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  });
}

void relu_bwd(const double* x, const double* gy, double* gx, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = i0;
    for (; i + 4 <= i1; i += 4) {
      const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
      const __m256d inc = _mm256_and_pd(_mm256_loadu_pd(gy + i), mask);
      _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), inc));
    }
    for (; i < i1; ++i) gx[i] = gx[i] + (x[i] > 0.0 ? gy[i] : 0.0);
  });
}

void add(const double* a, const double* b, double* c, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    std::size_t i = i0;
    for (; i + 4 <= i1; i += 4) {
      _mm256_storeu_pd(c + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < i1; ++i) c[i] = a[i] + b[i];
  });
}

void sub(const double* a, const double* b, double* c, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    std::size_t i = i0;
    for (; i + 4 <= i1; i += 4) {
      _mm256_storeu_pd(c + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < i1; ++i) c[i] = a[i] - b[i];
  });
}

void mul(const double* a, const double* b, double* c, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    std::size_t i = i0;
    for (; i + 4 <= i1; i += 4) {
      _mm256_storeu_pd(c + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < i1; ++i) c[i] = a[i] * b[i];
  });
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = i0;
    for (; i + 4 <= i1; i += 4) {
      const __m256d prod = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
      _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < i1; ++i) y[i] = y[i] + alpha * x[i];
  });
}

void scale(const double* x, double alpha, double* y, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = i0;
    for (; i + 4 <= i1; i += 4) {
      _mm256_storeu_pd(y + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    }
    for (; i < i1; ++i) y[i] = alpha * x[i];
  });
}

void soft_threshold(const double* x, double tau, double* y, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    const __m256d sign_bit = _mm256_set1_pd(-0.0);
    const __m256d tauv = _mm256_set1_pd(tau);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = i0;
    for (; i + 4 <= i1; i += 4) {
      const __m256d xv = _mm256_loadu_pd(x + i);
      const __m256d sign = _mm256_and_pd(xv, sign_bit);
      const __m256d mag = _mm256_sub_pd(_mm256_andnot_pd(sign_bit, xv), tauv);
      const __m256d keep = _mm256_cmp_pd(mag, zero, _CMP_GT_OQ);
      _mm256_storeu_pd(y + i, _mm256_and_pd(_mm256_or_pd(mag, sign), keep));
    }
    for (; i < i1; ++i) {
      const double mag = std::fabs(x[i]) - tau;
      y[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
    }
  });
}

void adam_step(double* w, double* m, double* v, const double* g,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bc1, double bc2) {
  const double c1 = 1.0 - beta1;
  const double c2 = 1.0 - beta2;
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    const __m256d b1v = _mm256_set1_pd(beta1), b2v = _mm256_set1_pd(beta2);
    const __m256d c1v = _mm256_set1_pd(c1), c2v = _mm256_set1_pd(c2);
    const __m256d bc1v = _mm256_set1_pd(bc1), bc2v = _mm256_set1_pd(bc2);
    const __m256d lrv = _mm256_set1_pd(lr), epsv = _mm256_set1_pd(eps);
    std::size_t i = i0;
    for (; i + 4 <= i1; i += 4) {
      const __m256d gv = _mm256_loadu_pd(g + i);
      const __m256d mv = _mm256_add_pd(_mm256_mul_pd(b1v, _mm256_loadu_pd(m + i)),
                                       _mm256_mul_pd(c1v, gv));
      const __m256d vv = _mm256_add_pd(_mm256_mul_pd(b2v, _mm256_loadu_pd(v + i)),
                                       _mm256_mul_pd(c2v, _mm256_mul_pd(gv, gv)));
      _mm256_storeu_pd(m + i, mv);
      _mm256_storeu_pd(v + i, vv);
      const __m256d mhat = _mm256_div_pd(mv, bc1v);
      const __m256d vhat = _mm256_div_pd(vv, bc2v);
      const __m256d den = _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv);
      const __m256d step = _mm256_mul_pd(lrv, _mm256_div_pd(mhat, den));
      _mm256_storeu_pd(w + i, _mm256_sub_pd(_mm256_loadu_pd(w + i), step));
    }
    for (; i < i1; ++i) {
      m[i] = beta1 * m[i] + c1 * g[i];
      v[i] = beta2 * v[i] + c2 * (g[i] * g[i]);
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] = w[i] - lr * (mhat / (std::sqrt(vhat) + eps));
    }
  });
}

void l2sq_scan(const double* q, const double* ct,
               std::size_t k, std::size_t d, double* out) {
  std::size_t j = 0;
  for (; j + 4 <= k; j += 4) _mm256_storeu_pd(out + j, _mm256_setzero_pd());
  for (; j < k; ++j) out[j] = 0.0;
  for (std::size_t dim = 0; dim < d; ++dim) {
    const __m256d qv = _mm256_set1_pd(q[dim]);
    const double* crow = ct + dim * k;
    j = 0;
    for (; j + 4 <= k; j += 4) {
      const __m256d diff = _mm256_sub_pd(qv, _mm256_loadu_pd(crow + j));
      const __m256d acc = _mm256_add_pd(_mm256_loadu_pd(out + j),
                                        _mm256_mul_pd(diff, diff));
      _mm256_storeu_pd(out + j, acc);
    }
    for (; j < k; ++j) {
      const double diff = q[dim] - crow[j];
      out[j] = out[j] + diff * diff;
    }
  }
}

}  // namespace

const Backend& avx2_backend() {
  static const Backend b = {
      "avx2",   gemm_nn,  gemm_tn, gemm_nt, relu,           relu_bwd,
      add,      sub,      mul,     axpy,    scale,          soft_threshold,
      adam_step, l2sq_scan,
  };
  return b;
}

}  // namespace amc::kern

#endif  // x86-64

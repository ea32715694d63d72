// NEON backend (aarch64, 2-wide f64 lanes). Mirrors the scalar reference
// loop-for-loop; see kernels.hpp for the bit-exactness contract.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <vector>

#include "core/threads.hpp"
#include "kernels/kernels.hpp"

namespace amc::kern {
namespace {

constexpr std::size_t kRowGrain = 8;
constexpr std::size_t kEltGrain = 1 << 14;

inline void axpy_row(double* crow, const double* brow, double av, std::size_t n) {
  const float64x2_t avv = vdupq_n_f64(av);
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const float64x2_t prod = vmulq_f64(avv, vld1q_f64(brow + j));
    vst1q_f64(crow + j, vaddq_f64(vld1q_f64(crow + j), prod));
  }
  for (; j < n; ++j) crow[j] = crow[j] + av * brow[j];
}

// Four reduction steps per pass over the c row; adds chain in ascending t
// order per element, bit-identical to four axpy_row calls.
inline void axpy_row4(double* crow, const double* b0, const double* b1,
                      const double* b2, const double* b3, const double* a4,
                      std::size_t n) {
  const float64x2_t a0 = vdupq_n_f64(a4[0]);
  const float64x2_t a1 = vdupq_n_f64(a4[1]);
  const float64x2_t a2 = vdupq_n_f64(a4[2]);
  const float64x2_t a3 = vdupq_n_f64(a4[3]);
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    float64x2_t acc = vld1q_f64(crow + j);
    acc = vaddq_f64(acc, vmulq_f64(a0, vld1q_f64(b0 + j)));
    acc = vaddq_f64(acc, vmulq_f64(a1, vld1q_f64(b1 + j)));
    acc = vaddq_f64(acc, vmulq_f64(a2, vld1q_f64(b2 + j)));
    acc = vaddq_f64(acc, vmulq_f64(a3, vld1q_f64(b3 + j)));
    vst1q_f64(crow + j, acc);
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
  std::vector<double> bt(k * n);
  transpose(b, bt.data(), n, k);
  const double* btp = bt.data();
  parallel_for(m, kRowGrain, [=](std::size_t i0, std::size_t i1) {
    rows_product(c + i0 * n, n, a + i0 * k, k, btp, n, i1 - i0, k, n);
  });
}

void relu(const double* x, double* y, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = i0;
    for (; i + 2 <= i1; i += 2) {
      const float64x2_t xv = vld1q_f64(x + i);
      const uint64x2_t gt = vcgtq_f64(xv, zero);
      vst1q_f64(y + i, vbslq_f64(gt, xv, zero));
    }
    for (; i < i1; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  });
}

void relu_bwd(const double* x, const double* gy, double* gx, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = i0;
    for (; i + 2 <= i1; i += 2) {
      const uint64x2_t gt = vcgtq_f64(vld1q_f64(x + i), zero);
      const float64x2_t inc = vbslq_f64(gt, vld1q_f64(gy + i), zero);
      vst1q_f64(gx + i, vaddq_f64(vld1q_f64(gx + i), inc));
    }
    for (; i < i1; ++i) gx[i] = gx[i] + (x[i] > 0.0 ? gy[i] : 0.0);
  });
}

void add(const double* a, const double* b, double* c, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    std::size_t i = i0;
    for (; i + 2 <= i1; i += 2) {
      vst1q_f64(c + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (; i < i1; ++i) c[i] = a[i] + b[i];
  });
}

void sub(const double* a, const double* b, double* c, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    std::size_t i = i0;
    for (; i + 2 <= i1; i += 2) {
      vst1q_f64(c + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (; i < i1; ++i) c[i] = a[i] - b[i];
  });
}

void mul(const double* a, const double* b, double* c, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    std::size_t i = i0;
    for (; i + 2 <= i1; i += 2) {
      vst1q_f64(c + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (; i < i1; ++i) c[i] = a[i] * b[i];
  });
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    const float64x2_t av = vdupq_n_f64(alpha);
    std::size_t i = i0;
    for (; i + 2 <= i1; i += 2) {
      const float64x2_t prod = vmulq_f64(av, vld1q_f64(x + i));
      vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), prod));
    }
    for (; i < i1; ++i) y[i] = y[i] + alpha * x[i];
  });
}

void scale(const double* x, double alpha, double* y, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    const float64x2_t av = vdupq_n_f64(alpha);
    std::size_t i = i0;
    for (; i + 2 <= i1; i += 2) vst1q_f64(y + i, vmulq_f64(av, vld1q_f64(x + i)));
    for (; i < i1; ++i) y[i] = alpha * x[i];
  });
}

void soft_threshold(const double* x, double tau, double* y, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    const float64x2_t tauv = vdupq_n_f64(tau);
    const float64x2_t zero = vdupq_n_f64(0.0);
    const uint64x2_t sign_bit = vdupq_n_u64(0x8000000000000000ULL);
    std::size_t i = i0;
    for (; i + 2 <= i1; i += 2) {
      const float64x2_t xv = vld1q_f64(x + i);
      const uint64x2_t sign =
          vandq_u64(vreinterpretq_u64_f64(xv), sign_bit);
      const float64x2_t mag = vsubq_f64(vabsq_f64(xv), tauv);
      const uint64x2_t keep = vcgtq_f64(mag, zero);
      const float64x2_t signed_mag =
          vreinterpretq_f64_u64(vorrq_u64(vreinterpretq_u64_f64(mag), sign));
      vst1q_f64(y + i, vbslq_f64(keep, signed_mag, zero));
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
    const float64x2_t b1v = vdupq_n_f64(beta1), b2v = vdupq_n_f64(beta2);
    const float64x2_t c1v = vdupq_n_f64(c1), c2v = vdupq_n_f64(c2);
    const float64x2_t bc1v = vdupq_n_f64(bc1), bc2v = vdupq_n_f64(bc2);
    const float64x2_t lrv = vdupq_n_f64(lr), epsv = vdupq_n_f64(eps);
    std::size_t i = i0;
    for (; i + 2 <= i1; i += 2) {
      const float64x2_t gv = vld1q_f64(g + i);
      const float64x2_t mv =
          vaddq_f64(vmulq_f64(b1v, vld1q_f64(m + i)), vmulq_f64(c1v, gv));
      const float64x2_t vv = vaddq_f64(vmulq_f64(b2v, vld1q_f64(v + i)),
                                       vmulq_f64(c2v, vmulq_f64(gv, gv)));
      vst1q_f64(m + i, mv);
      vst1q_f64(v + i, vv);
      const float64x2_t mhat = vdivq_f64(mv, bc1v);
      const float64x2_t vhat = vdivq_f64(vv, bc2v);
      const float64x2_t den = vaddq_f64(vsqrtq_f64(vhat), epsv);
      const float64x2_t step = vmulq_f64(lrv, vdivq_f64(mhat, den));
      vst1q_f64(w + i, vsubq_f64(vld1q_f64(w + i), step));
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
  for (; j < k; ++j) out[j] = 0.0;
  for (std::size_t dim = 0; dim < d; ++dim) {
    const float64x2_t qv = vdupq_n_f64(q[dim]);
    const double* crow = ct + dim * k;
    j = 0;
    for (; j + 2 <= k; j += 2) {
      const float64x2_t diff = vsubq_f64(qv, vld1q_f64(crow + j));
      vst1q_f64(out + j, vaddq_f64(vld1q_f64(out + j), vmulq_f64(diff, diff)));
    }
    for (; j < k; ++j) {
      const double diff = q[dim] - crow[j];
      out[j] = out[j] + diff * diff;
    }
  }
}

}  // namespace

const Backend& neon_backend() {
  static const Backend b = {
      "neon",   gemm_nn,  gemm_tn, gemm_nt, relu,           relu_bwd,
      add,      sub,      mul,     axpy,    scale,          soft_threshold,
      adam_step, l2sq_scan,
  };
  return b;
}

}  // namespace amc::kern

#endif  // __aarch64__

// Scalar reference backend. Every other backend is required to match these
// loops bit-for-bit, so the accumulation order here is the specification:
// each output element is a sum taken sequentially in ascending index order.

#include <cmath>
#include <cstring>

#include "core/threads.hpp"
#include "kernels/kernels.hpp"

namespace amc::kern {

void transpose(const double* src, double* dst, std::size_t rows, std::size_t cols) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t i0 = 0; i0 < rows; i0 += kBlock) {
    const std::size_t i1 = std::min(rows, i0 + kBlock);
    for (std::size_t j0 = 0; j0 < cols; j0 += kBlock) {
      const std::size_t j1 = std::min(cols, j0 + kBlock);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) {
          dst[j * rows + i] = src[i * cols + j];
        }
      }
    }
  }
}

namespace {

constexpr std::size_t kRowGrain = 8;
constexpr std::size_t kEltGrain = 1 << 14;

void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
  parallel_for(m, kRowGrain, [=](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      double* crow = c + i * n;
      const double* arow = a + i * k;
      for (std::size_t t = 0; t < k; ++t) {
        const double av = arow[t];
        const double* brow = b + t * n;
        for (std::size_t j = 0; j < n; ++j) {
          crow[j] = crow[j] + av * brow[j];
        }
      }
    }
  });
}

void gemm_tn(const double* a, const double* b, double* c,
             std::size_t k, std::size_t m, std::size_t n) {
  parallel_for(m, kRowGrain, [=](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      double* crow = c + i * n;
      for (std::size_t t = 0; t < k; ++t) {
        const double av = a[t * m + i];
        const double* brow = b + t * n;
        for (std::size_t j = 0; j < n; ++j) {
          crow[j] = crow[j] + av * brow[j];
        }
      }
    }
  });
}

void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
  parallel_for(m, kRowGrain, [=](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      const double* arow = a + i * k;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = b + j * k;
        double s = crow[j];
        for (std::size_t t = 0; t < k; ++t) {
          s = s + arow[t] * brow[t];
        }
        crow[j] = s;
      }
    }
  });
}

void relu(const double* x, double* y, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  });
}

void relu_bwd(const double* x, const double* gy, double* gx, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      gx[i] = gx[i] + (x[i] > 0.0 ? gy[i] : 0.0);
    }
  });
}

void add(const double* a, const double* b, double* c, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) c[i] = a[i] + b[i];
  });
}

void sub(const double* a, const double* b, double* c, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) c[i] = a[i] - b[i];
  });
}

void mul(const double* a, const double* b, double* c, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) c[i] = a[i] * b[i];
  });
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) y[i] = y[i] + alpha * x[i];
  });
}

void scale(const double* x, double alpha, double* y, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) y[i] = alpha * x[i];
  });
}

void soft_threshold(const double* x, double tau, double* y, std::size_t n) {
  parallel_for(n, kEltGrain, [=](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
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
    for (std::size_t i = i0; i < i1; ++i) {
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
  for (std::size_t j = 0; j < k; ++j) out[j] = 0.0;
  for (std::size_t dim = 0; dim < d; ++dim) {
    const double qv = q[dim];
    const double* crow = ct + dim * k;
    for (std::size_t j = 0; j < k; ++j) {
      const double diff = qv - crow[j];
      out[j] = out[j] + diff * diff;
    }
  }
}

}  // namespace

const Backend& scalar_backend() {
  static const Backend b = {
      "scalar", gemm_nn,  gemm_tn, gemm_nt, relu,           relu_bwd,
      add,      sub,      mul,     axpy,    scale,          soft_threshold,
      adam_step, l2sq_scan,
  };
  return b;
}

}  // namespace amc::kern

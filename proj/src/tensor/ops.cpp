#include "tensor/ops.hpp"

#include <cmath>
#include <cstring>

#include "kernels/kernels.hpp"

namespace amc::ops {

namespace {

bool wants_grad(Tape* tape, std::initializer_list<const TensorPtr*> inputs) {
  if (tape == nullptr) return false;
  for (const TensorPtr* t : inputs) {
    if (*t && (*t)->requires_grad()) return true;
  }
  return false;
}

TensorPtr fresh(std::vector<std::size_t> shape, bool grad) {
  auto out = make_tensor(Tensor(std::move(shape)));
  out->set_requires_grad(grad);
  return out;
}

void check_finite_scalar(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string(what) + " produced a non-finite value");
  }
}

// im2col for one sample: out[(c*KH+u)*KW+v, oy*OW+ox] = x[c, oy+u-ph, ox+v-pw]
// with zeros outside. Row order fixes the conv reduction order.
void im2col(const double* x, std::size_t c_in, std::size_t h, std::size_t w,
            std::size_t kh, std::size_t kw, std::size_t ph, std::size_t pw,
            std::size_t oh, std::size_t ow, double* out) {
  const std::size_t npos = oh * ow;
  std::size_t row = 0;
  for (std::size_t c = 0; c < c_in; ++c) {
    const double* xc = x + c * h * w;
    for (std::size_t u = 0; u < kh; ++u) {
      for (std::size_t v = 0; v < kw; ++v, ++row) {
        double* o = out + row * npos;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + u) -
                                    static_cast<std::ptrdiff_t>(ph);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
            std::memset(o + oy * ow, 0, ow * sizeof(double));
            continue;
          }
          const double* xrow = xc + static_cast<std::size_t>(iy) * w;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + v) -
                                      static_cast<std::ptrdiff_t>(pw);
            o[oy * ow + ox] =
                (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w))
                    ? 0.0
                    : xrow[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

// Transpose of im2col: scatter-add columns back into the input gradient.
void col2im_add(const double* cols, std::size_t c_in, std::size_t h, std::size_t w,
                std::size_t kh, std::size_t kw, std::size_t ph, std::size_t pw,
                std::size_t oh, std::size_t ow, double* gx) {
  const std::size_t npos = oh * ow;
  std::size_t row = 0;
  for (std::size_t c = 0; c < c_in; ++c) {
    double* gc = gx + c * h * w;
    for (std::size_t u = 0; u < kh; ++u) {
      for (std::size_t v = 0; v < kw; ++v, ++row) {
        const double* o = cols + row * npos;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + u) -
                                    static_cast<std::ptrdiff_t>(ph);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          double* grow = gc + static_cast<std::size_t>(iy) * w;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + v) -
                                      static_cast<std::ptrdiff_t>(pw);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            grow[static_cast<std::size_t>(ix)] += o[oy * ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace

TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  if (a->rank() != 2 || b->rank() != 2 || a->dim(1) != b->dim(0)) {
    throw DimensionError("matmul: incompatible shapes " +
                         Tensor::shape_str(a->shape()) + " and " +
                         Tensor::shape_str(b->shape()));
  }
  const std::size_t m = a->dim(0), k = a->dim(1), n = b->dim(1);
  const bool g = wants_grad(tape, {&a, &b});
  auto out = fresh({m, n}, g);
  kern::backend().gemm_nn(a->data(), b->data(), out->data(), m, k, n);
  if (g) {
    tape->record(out, [a, b, out, m, k, n] {
      const auto& gy = out->grad();
      if (a->requires_grad()) {
        kern::backend().gemm_nt(gy.data(), b->data(), a->grad().data(), m, n, k);
      }
      if (b->requires_grad()) {
        kern::backend().gemm_tn(a->data(), gy.data(), b->grad().data(), m, k, n);
      }
    });
  }
  return out;
}

TensorPtr dense(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                const TensorPtr& bias) {
  if (x->rank() != 2 || w->rank() != 2 || x->dim(1) != w->dim(0)) {
    throw DimensionError("dense: input " + Tensor::shape_str(x->shape()) +
                         " does not match weight " + Tensor::shape_str(w->shape()));
  }
  const std::size_t batch = x->dim(0), in = x->dim(1), out_dim = w->dim(1);
  if (bias->size() != out_dim) throw DimensionError("dense: bias length mismatch");

  const bool g = wants_grad(tape, {&x, &w, &bias});
  auto out = fresh({batch, out_dim}, g);
  kern::backend().gemm_nn(x->data(), w->data(), out->data(), batch, in, out_dim);
  for (std::size_t b = 0; b < batch; ++b) {
    kern::backend().add(out->data() + b * out_dim, bias->data(),
                        out->data() + b * out_dim, out_dim);
  }
  if (g) {
    tape->record(out, [x, w, bias, out, batch, in, out_dim] {
      const auto& gy = out->grad();
      if (x->requires_grad()) {
        kern::backend().gemm_nt(gy.data(), w->data(), x->grad().data(),
                                batch, out_dim, in);
      }
      if (w->requires_grad()) {
        kern::backend().gemm_tn(x->data(), gy.data(), w->grad().data(),
                                batch, in, out_dim);
      }
      if (bias->requires_grad()) {
        auto& gb = bias->grad();
        for (std::size_t b = 0; b < batch; ++b) {
          kern::backend().add(gb.data(), gy.data() + b * out_dim, gb.data(), out_dim);
        }
      }
    });
  }
  return out;
}

TensorPtr conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& kernels,
                 const TensorPtr& bias, int pad_h, int pad_w) {
  if (x->rank() != 4 || kernels->rank() != 4) {
    throw DimensionError("conv2d expects x[B,C,H,W] and kernels[CO,C,KH,KW]");
  }
  if (pad_h < 0 || pad_w < 0) throw ParameterError("conv2d: negative padding");
  const std::size_t batch = x->dim(0), c_in = x->dim(1), h = x->dim(2), w = x->dim(3);
  const std::size_t c_out = kernels->dim(0), kh = kernels->dim(2), kw = kernels->dim(3);
  if (kernels->dim(1) != c_in) {
    throw DimensionError("conv2d: kernel channel count " +
                         std::to_string(kernels->dim(1)) + " != input channels " +
                         std::to_string(c_in));
  }
  const std::size_t ph = static_cast<std::size_t>(pad_h);
  const std::size_t pw = static_cast<std::size_t>(pad_w);
  if (kh > h + 2 * ph || kw > w + 2 * pw) {
    throw DimensionError("conv2d: kernel " + std::to_string(kh) + "x" +
                         std::to_string(kw) + " larger than padded input " +
                         std::to_string(h + 2 * ph) + "x" + std::to_string(w + 2 * pw));
  }
  if (bias->size() != c_out) throw DimensionError("conv2d: bias length mismatch");

  const std::size_t oh = h + 2 * ph - kh + 1;
  const std::size_t ow = w + 2 * pw - kw + 1;
  const std::size_t npos = oh * ow;
  const std::size_t ck = c_in * kh * kw;

  const bool g = wants_grad(tape, {&x, &kernels, &bias});
  auto out = fresh({batch, c_out, oh, ow}, g);

  // The kernel tensor viewed as [CO x (C*KH*KW)] is already the gemm layout.
  std::vector<double> cols(ck * npos);
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(x->data() + b * c_in * h * w, c_in, h, w, kh, kw, ph, pw, oh, ow,
           cols.data());
    double* yb = out->data() + b * c_out * npos;
    kern::backend().gemm_nn(kernels->data(), cols.data(), yb, c_out, ck, npos);
    for (std::size_t c = 0; c < c_out; ++c) {
      const double bv = bias->data()[c];
      double* yc = yb + c * npos;
      for (std::size_t p = 0; p < npos; ++p) yc[p] = yc[p] + bv;
    }
  }

  if (g) {
    tape->record(out, [x, kernels, bias, out, batch, c_in, h, w, c_out, kh, kw, ph, pw,
                  oh, ow, npos, ck] {
      const auto& gy = out->grad();
      std::vector<double> cols(ck * npos);
      std::vector<double> gcols(ck * npos);
      for (std::size_t b = 0; b < batch; ++b) {
        const double* gyb = gy.data() + b * c_out * npos;
        if (kernels->requires_grad()) {
          im2col(x->data() + b * c_in * h * w, c_in, h, w, kh, kw, ph, pw, oh, ow,
                 cols.data());
          kern::backend().gemm_nt(gyb, cols.data(), kernels->grad().data(),
                                  c_out, npos, ck);
        }
        if (bias->requires_grad()) {
          auto& gb = bias->grad();
          for (std::size_t c = 0; c < c_out; ++c) {
            double s = gb[c];
            const double* gyc = gyb + c * npos;
            for (std::size_t p = 0; p < npos; ++p) s = s + gyc[p];
            gb[c] = s;
          }
        }
        if (x->requires_grad()) {
          std::fill(gcols.begin(), gcols.end(), 0.0);
          kern::backend().gemm_tn(kernels->data(), gyb, gcols.data(),
                                  c_out, ck, npos);
          col2im_add(gcols.data(), c_in, h, w, kh, kw, ph, pw, oh, ow,
                     x->grad().data() + b * c_in * h * w);
        }
      }
    });
  }
  return out;
}

TensorPtr relu(Tape* tape, const TensorPtr& x) {
  const bool g = wants_grad(tape, {&x});
  auto out = fresh(x->shape(), g);
  kern::backend().relu(x->data(), out->data(), x->size());
  if (g) {
    tape->record(out, [x, out] {
      kern::backend().relu_bwd(x->data(), out->grad().data(), x->grad().data(),
                               x->size());
    });
  }
  return out;
}

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape() != b->shape()) {
    throw DimensionError("add: shape mismatch " + Tensor::shape_str(a->shape()) +
                         " vs " + Tensor::shape_str(b->shape()));
  }
  const bool g = wants_grad(tape, {&a, &b});
  auto out = fresh(a->shape(), g);
  kern::backend().add(a->data(), b->data(), out->data(), a->size());
  if (g) {
    tape->record(out, [a, b, out] {
      const auto& gy = out->grad();
      if (a->requires_grad()) {
        kern::backend().add(a->grad().data(), gy.data(), a->grad().data(), gy.size());
      }
      if (b->requires_grad()) {
        kern::backend().add(b->grad().data(), gy.data(), b->grad().data(), gy.size());
      }
    });
  }
  return out;
}

TensorPtr hadamard(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape() != b->shape()) {
    throw DimensionError("hadamard: shape mismatch " +
                         Tensor::shape_str(a->shape()) + " vs " +
                         Tensor::shape_str(b->shape()));
  }
  const bool g = wants_grad(tape, {&a, &b});
  auto out = fresh(a->shape(), g);
  kern::backend().mul(a->data(), b->data(), out->data(), a->size());
  if (g) {
    tape->record(out, [a, b, out] {
      const auto& gy = out->grad();
      std::vector<double> tmp(gy.size());
      if (a->requires_grad()) {
        kern::backend().mul(gy.data(), b->data(), tmp.data(), gy.size());
        kern::backend().add(a->grad().data(), tmp.data(), a->grad().data(), gy.size());
      }
      if (b->requires_grad()) {
        kern::backend().mul(gy.data(), a->data(), tmp.data(), gy.size());
        kern::backend().add(b->grad().data(), tmp.data(), b->grad().data(), gy.size());
      }
    });
  }
  return out;
}

TensorPtr scale(Tape* tape, const TensorPtr& x, double alpha) {
  const bool g = wants_grad(tape, {&x});
  auto out = fresh(x->shape(), g);
  kern::backend().scale(x->data(), alpha, out->data(), x->size());
  if (g) {
    tape->record(out, [x, out, alpha] {
      kern::backend().axpy(alpha, out->grad().data(), x->grad().data(), x->size());
    });
  }
  return out;
}

TensorPtr concat_channels(Tape* tape, const std::vector<TensorPtr>& xs) {
  if (xs.empty()) throw ParameterError("concat_channels: no inputs");
  const auto& s0 = xs.front()->shape();
  if (s0.size() != 4) throw DimensionError("concat_channels expects [B,C,H,W]");
  std::size_t total_c = 0;
  bool g = false;
  for (const auto& x : xs) {
    const auto& s = x->shape();
    if (s.size() != 4 || s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3]) {
      throw DimensionError("concat_channels: branch shapes disagree");
    }
    total_c += s[1];
    g = g || (tape != nullptr && x->requires_grad());
  }
  const std::size_t batch = s0[0], hw = s0[2] * s0[3];
  auto out = fresh({batch, total_c, s0[2], s0[3]}, g);
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t c_off = 0;
    for (const auto& x : xs) {
      const std::size_t c = x->dim(1);
      std::memcpy(out->data() + (b * total_c + c_off) * hw,
                  x->data() + b * c * hw, c * hw * sizeof(double));
      c_off += c;
    }
  }
  if (g) {
    tape->record(out, [xs, out, batch, total_c, hw] {
      const auto& gy = out->grad();
      std::size_t c_off = 0;
      for (const auto& x : xs) {
        const std::size_t c = x->dim(1);
        if (x->requires_grad()) {
          auto& gx = x->grad();
          for (std::size_t b = 0; b < batch; ++b) {
            kern::backend().add(gx.data() + b * c * hw,
                                gy.data() + (b * total_c + c_off) * hw,
                                gx.data() + b * c * hw, c * hw);
          }
        }
        c_off += c;
      }
    });
  }
  return out;
}

TensorPtr flatten(Tape* tape, const TensorPtr& x) {
  if (x->rank() < 2) throw DimensionError("flatten expects a batched tensor");
  const std::size_t batch = x->dim(0);
  const std::size_t rest = x->size() / batch;
  const bool g = wants_grad(tape, {&x});
  auto out = fresh({batch, rest}, g);
  std::memcpy(out->data(), x->data(), x->size() * sizeof(double));
  if (g) {
    tape->record(out, [x, out] {
      kern::backend().add(x->grad().data(), out->grad().data(), x->grad().data(),
                          x->size());
    });
  }
  return out;
}

TensorPtr dropout(Tape* tape, const TensorPtr& x, double rate, Rng& rng,
                  bool training) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ParameterError("dropout rate must be in [0,1)");
  }
  if (!training) return x;
  const bool g = wants_grad(tape, {&x});
  auto out = fresh(x->shape(), g);
  auto mask = std::make_shared<std::vector<double>>(x->size());
  const double keep_scale = 1.0 / (1.0 - rate);
  if (rate == 0.5) {
    // One u64 covers 64 elements (LSB first); the common case by far.
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < x->size(); ++i) {
      if (i % 64 == 0) bits = rng.next_u64();
      (*mask)[i] = (bits >> (i % 64)) & 1 ? 0.0 : keep_scale;
    }
  } else {
    for (std::size_t i = 0; i < x->size(); ++i) {
      (*mask)[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    }
  }
  kern::backend().mul(x->data(), mask->data(), out->data(), x->size());
  if (g) {
    tape->record(out, [x, out, mask] {
      std::vector<double> scaled(x->size());
      kern::backend().mul(out->grad().data(), mask->data(), scaled.data(), x->size());
      kern::backend().add(x->grad().data(), scaled.data(), x->grad().data(),
                          x->size());
    });
  }
  return out;
}

TensorPtr softmax_t(Tape* tape, const TensorPtr& logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw ParameterError("softmax temperature must be positive");
  }
  const std::size_t n = logits->rank() == 1 ? logits->dim(0)
                                            : logits->shape().back();
  const std::size_t batch = logits->size() / n;
  if (logits->rank() > 2) throw DimensionError("softmax_t expects [B x n] or [n]");

  const bool g = wants_grad(tape, {&logits});
  auto out = fresh(logits->shape(), g);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* lrow = logits->data() + b * n;
    double* orow = out->data() + b * n;
    double mx = lrow[0];
    for (std::size_t i = 1; i < n; ++i) mx = lrow[i] > mx ? lrow[i] : mx;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      orow[i] = std::exp((lrow[i] - mx) / temperature);
      s = s + orow[i];
    }
    for (std::size_t i = 0; i < n; ++i) orow[i] /= s;
  }
  if (g) {
    tape->record(out, [logits, out, batch, n, temperature] {
      auto& gx = logits->grad();
      const auto& gy = out->grad();
      for (std::size_t b = 0; b < batch; ++b) {
        const double* srow = out->data() + b * n;
        const double* grow = gy.data() + b * n;
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot = dot + grow[i] * srow[i];
        for (std::size_t i = 0; i < n; ++i) {
          gx[b * n + i] += srow[i] * (grow[i] - dot) / temperature;
        }
      }
    });
  }
  return out;
}

TensorPtr cross_entropy(Tape* tape, const TensorPtr& probs,
                        const std::vector<int>& labels) {
  if (probs->rank() != 2) throw DimensionError("cross_entropy expects [B x n]");
  const std::size_t batch = probs->dim(0), n = probs->dim(1);
  if (labels.size() != batch) {
    throw DimensionError("cross_entropy: batch " + std::to_string(batch) +
                         " vs " + std::to_string(labels.size()) + " labels");
  }
  for (std::size_t b = 0; b < batch; ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= n) {
      throw IndexError("cross_entropy: label " + std::to_string(labels[b]) +
                       " out of range [0," + std::to_string(n) + ")");
    }
  }
  const bool g = wants_grad(tape, {&probs});
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    loss = loss - std::log(probs->at(b, static_cast<std::size_t>(labels[b])) + kLogFloor);
  }
  loss /= static_cast<double>(batch);
  check_finite_scalar(loss, "cross_entropy");
  auto out = make_tensor(Tensor::scalar(loss));
  out->set_requires_grad(g);
  if (g) {
    auto lbl = std::make_shared<std::vector<int>>(labels);
    tape->record(out, [probs, out, lbl, batch, n] {
      const double go = out->grad()[0];
      auto& gp = probs->grad();
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t j = static_cast<std::size_t>((*lbl)[b]);
        gp[b * n + j] += -go / (static_cast<double>(batch) *
                                (probs->at(b, j) + kLogFloor));
      }
    });
  }
  return out;
}

TensorPtr kl_divergence(Tape* tape, const TensorPtr& p, const TensorPtr& q) {
  if (p->shape() != q->shape()) {
    throw DimensionError("kl_divergence: shape mismatch " +
                         Tensor::shape_str(p->shape()) + " vs " +
                         Tensor::shape_str(q->shape()));
  }
  if (p->rank() != 2) throw DimensionError("kl_divergence expects [B x n]");
  const std::size_t batch = p->dim(0), n = p->dim(1);
  const bool g = tape != nullptr && q->requires_grad();
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      const double pv = p->at(b, i);
      loss = loss + pv * std::log((pv + kLogFloor) / (q->at(b, i) + kLogFloor));
    }
  }
  loss /= static_cast<double>(batch);
  check_finite_scalar(loss, "kl_divergence");
  auto out = make_tensor(Tensor::scalar(loss));
  out->set_requires_grad(g);
  if (g) {
    tape->record(out, [p, q, out, batch, n] {
      const double go = out->grad()[0];
      auto& gq = q->grad();
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
          gq[b * n + i] += -go * p->at(b, i) /
                           (static_cast<double>(batch) * (q->at(b, i) + kLogFloor));
        }
      }
    });
  }
  return out;
}

TensorPtr sum(Tape* tape, const TensorPtr& x) {
  const bool g = wants_grad(tape, {&x});
  double s = 0.0;
  const double* d = x->data();
  for (std::size_t i = 0; i < x->size(); ++i) s = s + d[i];
  auto out = make_tensor(Tensor::scalar(s));
  out->set_requires_grad(g);
  if (g) {
    tape->record(out, [x, out] {
      auto& gx = x->grad();
      const double go = out->grad()[0];
      for (std::size_t i = 0; i < x->size(); ++i) gx[i] += go;
    });
  }
  return out;
}

std::size_t argmax(const double* x, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

}  // namespace amc::ops

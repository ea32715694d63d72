#pragma once

#include <vector>

#include "core/rng.hpp"
#include "tensor/tape.hpp"
#include "tensor/tensor.hpp"

namespace amc::ops {

// Forward operations with reverse-mode gradients. Passing tape == nullptr
// runs pure inference: nothing is recorded and no gradients flow.

// c[m x n] = a[m x k] * b[k x n]
TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& b);

// y[B x out] = x[B x in] * w[in x out] + bias[out]
TensorPtr dense(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                const TensorPtr& bias);

// Cross-correlation with zero padding, stride 1.
// x[B x C x H x W], k[CO x C x KH x KW] -> y[B x CO x OH x OW]
TensorPtr conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& kernels,
                 const TensorPtr& bias, int pad_h, int pad_w);

TensorPtr relu(Tape* tape, const TensorPtr& x);

// Elementwise sum of two same-shape tensors (residual connections).
TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b);

// Elementwise product of two same-shape tensors.
TensorPtr hadamard(Tape* tape, const TensorPtr& a, const TensorPtr& b);

TensorPtr scale(Tape* tape, const TensorPtr& x, double alpha);

// Concatenate along the channel axis: inputs [B x C_i x H x W].
TensorPtr concat_channels(Tape* tape, const std::vector<TensorPtr>& xs);

// [B x ...] -> [B x rest]
TensorPtr flatten(Tape* tape, const TensorPtr& x);

// Inverted dropout; active only when training. The mask is drawn from the
// rng in element-index order (rate 0.5 packs 64 mask bits per draw).
TensorPtr dropout(Tape* tape, const TensorPtr& x, double rate, Rng& rng,
                  bool training);

// Row-wise tempered softmax over the last axis of [B x n] (or [n]).
// Computed with max-subtraction; rows sum to 1 and are strictly positive.
TensorPtr softmax_t(Tape* tape, const TensorPtr& logits, double temperature);

// -(1/B) sum_b log(probs[b, labels[b]] + delta), delta = 1e-12.
TensorPtr cross_entropy(Tape* tape, const TensorPtr& probs,
                        const std::vector<int>& labels);

// (1/B) sum_{b,i} p * log((p + delta) / (q + delta)); gradient flows to q
// only (p is treated as a detached teacher distribution).
TensorPtr kl_divergence(Tape* tape, const TensorPtr& p, const TensorPtr& q);

// Scalar sum of all elements.
TensorPtr sum(Tape* tape, const TensorPtr& x);

// Index of the largest element in [lo, hi) of a flat buffer; ties resolve
// to the lowest index.
std::size_t argmax(const double* x, std::size_t n);

inline constexpr double kLogFloor = 1e-12;

}  // namespace amc::ops

#pragma once

#include <vector>

#include "mhp/tensor.hpp"

namespace mhp {

// Broadcast shape of two operands under trailing-dimension rules.
Shape broadcast_shapes(const Shape& a, const Shape& b);

// Elementwise binary ops (broadcasting).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// Elementwise unary ops.
Tensor neg(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);  // DomainError on non-positive entries
Tensor sqrt(const Tensor& x);
Tensor square(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor silu(const Tensor& x);
// beta * log(1 + exp(x / beta)); beta broadcasts against x and is
// differentiable.
Tensor softplus(const Tensor& x, const Tensor& beta);
Tensor softplus(const Tensor& x, double beta = 1.0);
// Gradient passes through inside [lo, hi] and is zero outside.
Tensor clamp(const Tensor& x, double lo, double hi);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& x);
Tensor operator+(const Tensor& a, double b);
Tensor operator-(const Tensor& a, double b);
Tensor operator*(const Tensor& a, double b);
Tensor operator*(double a, const Tensor& b);
Tensor operator/(const Tensor& a, double b);

// [..., m, k] x [..., k, n] -> [..., m, n]; leading dims broadcast. A rank-1
// right operand is treated as a column and the trailing 1 is dropped.
Tensor matmul(const Tensor& a, const Tensor& b);
// Swaps the last two axes.
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, int axis, bool keepdim = false);
Tensor mean(const Tensor& x, int axis, bool keepdim = false);
Tensor max(const Tensor& x, int axis, bool keepdim = false);
Tensor softmax(const Tensor& x, int axis);
Tensor log_softmax(const Tensor& x, int axis);

// Selects slices along `axis`; an index of -1 yields a zero slice that
// receives no gradient.
Tensor index_select(const Tensor& x, int axis, const std::vector<long>& indices);
// out[i...] = x[i..., indices[i...]] along the last axis; indices has the
// shape of x without its last axis (flattened row-major).
Tensor take_along_last(const Tensor& x, const std::vector<long>& indices);
Tensor slice(const Tensor& x, int axis, std::size_t start, std::size_t length);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor pad(const Tensor& x, int axis, std::size_t before, std::size_t after,
           double value = 0.0);

// Depthwise causal convolution over the sequence axis.
// x: [..., L, D], kernel: [W, D], bias: [D] (may be undefined).
// out[t, d] = bias[d] + sum_w kernel[w, d] * x[t - W + 1 + w, d], zero padded.
Tensor causal_conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias);

}  // namespace mhp

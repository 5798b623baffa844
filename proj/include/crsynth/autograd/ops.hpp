#pragma once

#include <vector>

#include "crsynth/autograd/variable.hpp"

namespace crsynth::ag::ops {

// ---- elementwise (numpy-style broadcasting on binary ops) ----
Variable add(const Variable& a, const Variable& b);
Variable sub(const Variable& a, const Variable& b);
Variable mul(const Variable& a, const Variable& b);
Variable div(const Variable& a, const Variable& b);
Variable neg(const Variable& x);
Variable add_scalar(const Variable& x, double c);
Variable mul_scalar(const Variable& x, double c);
Variable exp(const Variable& x);
Variable log(const Variable& x);
Variable sqrt(const Variable& x);
Variable tanh(const Variable& x);
Variable sigmoid(const Variable& x);
Variable softplus(const Variable& x);  // numerically stable log(1 + e^x)
Variable abs(const Variable& x);
Variable square(const Variable& x);
Variable clamp_min(const Variable& x, double lo);
Variable pow_scalar(const Variable& x, double p);  // requires x > 0 when p is non-integer

// Mish activation x * tanh(softplus(x)), composed from primitives.
Variable mish(const Variable& x);
// tanh-approximated GELU.
Variable gelu(const Variable& x);

// ---- reductions ----
Variable sum_all(const Variable& x);  // -> shape {1}
Variable sum_axes(const Variable& x, std::vector<int> axes, bool keepdim);
Variable mean_all(const Variable& x);
Variable mean_axes(const Variable& x, std::vector<int> axes, bool keepdim);
Variable max_axis(const Variable& x, int axis, bool keepdim);

// ---- movement ----
Variable reshape(const Variable& x, Shape s);
Variable permute(const Variable& x, std::vector<int> perm);
Variable slice(const Variable& x, int axis, int64_t start, int64_t len);
Variable concat(const std::vector<Variable>& xs, int axis);
Variable broadcast_to(const Variable& x, const Shape& s);
// Sum-reduce a gradient back to a broadcast operand's shape.
Variable reduce_to(const Variable& g, const Shape& target);
Variable gather_rows(const Variable& table, std::vector<int64_t> indices);
Variable scatter_rows(const Variable& rows, std::vector<int64_t> indices, int64_t num_rows);
// Cyclic shift along the last two axes.
Variable roll2d(const Variable& x, int64_t shift_h, int64_t shift_w);

// ---- matrix products ----
Variable matmul(const Variable& a, const Variable& b);  // (m,k) x (k,n)
Variable bmm(const Variable& a, const Variable& b);     // (B,m,k) x (B,k,n)

// ---- convolution family (NCHW, zero padding) ----
Variable conv2d(const Variable& x, const Variable& w, int stride, int pad);
// Adjoint of conv2d in its input: maps (N,Co,OH,OW) back to (N,Ci,H,W).
// Doubles as the transposed convolution with weight (Ci_of_output? see note):
// weight layout (Co, Ci, kh, kw) of the *forward* conv it transposes.
Variable conv2d_input_adj(const Variable& gy, const Variable& w, int stride, int pad, int64_t in_h, int64_t in_w);
// Adjoint of conv2d in its weight.
Variable conv2d_weight_adj(const Variable& x, const Variable& gy, int stride, int pad, int64_t kh, int64_t kw);

// ---- padding / resampling ----
Variable pad_replicate(const Variable& x, int p);
Variable unpad_replicate(const Variable& gy, int p);  // adjoint of pad_replicate
Variable pad_zero(const Variable& x, int p);
Variable interp_bilinear(const Variable& x, int64_t out_h, int64_t out_w);
Variable interp_bilinear_adj(const Variable& gy, int64_t in_h, int64_t in_w);
Variable upsample_nearest(const Variable& x, int factor);
Variable sumpool(const Variable& x, int factor);  // adjoint of upsample_nearest
Variable avgpool2(const Variable& x);             // 2x2 average pooling

// ---- composites ----
Variable softmax_lastdim(const Variable& x);
// L2 normalization along `axis` with epsilon inside the square root.
Variable l2_normalize(const Variable& x, int axis, double eps = 1e-12);
Variable matvec(const Variable& m, const Variable& v);  // (r,c) x (c) -> (r)
Variable dot(const Variable& a, const Variable& b);     // flattened inner product -> {1}

}  // namespace crsynth::ag::ops

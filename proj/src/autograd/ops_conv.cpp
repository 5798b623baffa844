#include <Eigen/Dense>
#include <cstring>

#include "crsynth/autograd/ops.hpp"

namespace crsynth::ag::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

int64_t conv_out(int64_t in, int64_t k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

// Unrolls (Ci,H,W) into (Ci*kh*kw, OH*OW) with zero padding.
void im2col(const double* x, int64_t Ci, int64_t H, int64_t W, int64_t kh, int64_t kw, int stride, int pad,
            int64_t OH, int64_t OW, double* cols) {
  for (int64_t ci = 0; ci < Ci; ++ci) {
    const double* xc = x + ci * H * W;
    for (int64_t ki = 0; ki < kh; ++ki) {
      for (int64_t kj = 0; kj < kw; ++kj) {
        double* row = cols + ((ci * kh + ki) * kw + kj) * OH * OW;
        for (int64_t oy = 0; oy < OH; ++oy) {
          int64_t iy = oy * stride - pad + ki;
          double* dst = row + oy * OW;
          if (iy < 0 || iy >= H) {
            std::memset(dst, 0, static_cast<size_t>(OW) * sizeof(double));
            continue;
          }
          const double* src = xc + iy * W;
          for (int64_t ox = 0; ox < OW; ++ox) {
            int64_t ix = ox * stride - pad + kj;
            dst[ox] = (ix >= 0 && ix < W) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates columns back into the (Ci,H,W) image.
void col2im_add(const double* cols, int64_t Ci, int64_t H, int64_t W, int64_t kh, int64_t kw, int stride, int pad,
                int64_t OH, int64_t OW, double* x) {
  for (int64_t ci = 0; ci < Ci; ++ci) {
    double* xc = x + ci * H * W;
    for (int64_t ki = 0; ki < kh; ++ki) {
      for (int64_t kj = 0; kj < kw; ++kj) {
        const double* row = cols + ((ci * kh + ki) * kw + kj) * OH * OW;
        for (int64_t oy = 0; oy < OH; ++oy) {
          int64_t iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= H) continue;
          const double* src = row + oy * OW;
          double* dst = xc + iy * W;
          for (int64_t ox = 0; ox < OW; ++ox) {
            int64_t ix = ox * stride - pad + kj;
            if (ix >= 0 && ix < W) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

struct ConvDims {
  int64_t N, Ci, H, W, Co, kh, kw;
};

ConvDims check_conv(const Tensor& x, const Tensor& w, const char* who) {
  if (x.rank() != 4 || w.rank() != 4) throw ShapeError(std::string(who) + ": expects rank-4 input and weight");
  ConvDims d{x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3], w.shape()[0], w.shape()[2], w.shape()[3]};
  if (w.shape()[1] != d.Ci) {
    throw ShapeError(std::string(who) + ": input has " + std::to_string(d.Ci) + " channels but weight expects " +
                     std::to_string(w.shape()[1]));
  }
  return d;
}

}  // namespace

Variable conv2d(const Variable& x, const Variable& w, int stride, int pad) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  ConvDims d = check_conv(xv, wv, "conv2d");
  int64_t OH = conv_out(d.H, d.kh, stride, pad);
  int64_t OW = conv_out(d.W, d.kw, stride, pad);
  if (OH <= 0 || OW <= 0) throw ShapeError("conv2d: output would be empty");

  int64_t ckk = d.Ci * d.kh * d.kw;
  Tensor out(Shape{d.N, d.Co, OH, OW});
  std::vector<double> cols(static_cast<size_t>(ckk * OH * OW));
  CMap W2(wv.data(), d.Co, ckk);
  for (int64_t n = 0; n < d.N; ++n) {
    im2col(xv.data() + n * d.Ci * d.H * d.W, d.Ci, d.H, d.W, d.kh, d.kw, stride, pad, OH, OW, cols.data());
    MMap O(out.data() + n * d.Co * OH * OW, d.Co, OH * OW);
    O.noalias() = W2 * CMap(cols.data(), ckk, OH * OW);
  }
  int64_t in_h = d.H, in_w = d.W, kh = d.kh, kw = d.kw;
  return make_node("conv2d", std::move(out), {x, w},
                   [stride, pad, in_h, in_w, kh, kw](const Variable& gy, const std::vector<Variable>& in,
                                                     const Variable&) {
                     Variable gx = conv2d_input_adj(gy, in[1], stride, pad, in_h, in_w);
                     Variable gw = conv2d_weight_adj(in[0], gy, stride, pad, kh, kw);
                     return std::vector<Variable>{gx, gw};
                   });
}

Variable conv2d_input_adj(const Variable& gy, const Variable& w, int stride, int pad, int64_t in_h, int64_t in_w) {
  const Tensor& gv = gy.value();
  const Tensor& wv = w.value();
  if (gv.rank() != 4 || wv.rank() != 4) throw ShapeError("conv2d_input_adj: expects rank-4 operands");
  int64_t N = gv.shape()[0], Co = gv.shape()[1], OH = gv.shape()[2], OW = gv.shape()[3];
  int64_t Ci = wv.shape()[1], kh = wv.shape()[2], kw = wv.shape()[3];
  if (wv.shape()[0] != Co) throw ShapeError("conv2d_input_adj: channel mismatch between gradient and weight");
  if (conv_out(in_h, kh, stride, pad) != OH || conv_out(in_w, kw, stride, pad) != OW) {
    throw ShapeError("conv2d_input_adj: geometry mismatch for target " + std::to_string(in_h) + "x" +
                     std::to_string(in_w));
  }

  int64_t ckk = Ci * kh * kw;
  Tensor out(Shape{N, Ci, in_h, in_w});
  std::vector<double> cols(static_cast<size_t>(ckk * OH * OW));
  CMap W2(wv.data(), Co, ckk);
  for (int64_t n = 0; n < N; ++n) {
    MMap C(cols.data(), ckk, OH * OW);
    C.noalias() = W2.transpose() * CMap(gv.data() + n * Co * OH * OW, Co, OH * OW);
    col2im_add(cols.data(), Ci, in_h, in_w, kh, kw, stride, pad, OH, OW, out.data() + n * Ci * in_h * in_w);
  }
  return make_node("conv2d_input_adj", std::move(out), {gy, w},
                   [stride, pad, kh, kw](const Variable& g2, const std::vector<Variable>& in, const Variable&) {
                     Variable g_gy = conv2d(g2, in[1], stride, pad);
                     Variable g_w = conv2d_weight_adj(g2, in[0], stride, pad, kh, kw);
                     return std::vector<Variable>{g_gy, g_w};
                   });
}

Variable conv2d_weight_adj(const Variable& x, const Variable& gy, int stride, int pad, int64_t kh, int64_t kw) {
  const Tensor& xv = x.value();
  const Tensor& gv = gy.value();
  if (xv.rank() != 4 || gv.rank() != 4) throw ShapeError("conv2d_weight_adj: expects rank-4 operands");
  int64_t N = xv.shape()[0], Ci = xv.shape()[1], H = xv.shape()[2], W = xv.shape()[3];
  int64_t Co = gv.shape()[1], OH = gv.shape()[2], OW = gv.shape()[3];
  if (gv.shape()[0] != N) throw ShapeError("conv2d_weight_adj: batch mismatch");
  if (conv_out(H, kh, stride, pad) != OH || conv_out(W, kw, stride, pad) != OW) {
    throw ShapeError("conv2d_weight_adj: geometry mismatch");
  }

  int64_t ckk = Ci * kh * kw;
  Tensor out(Shape{Co, Ci, kh, kw});
  std::vector<double> cols(static_cast<size_t>(ckk * OH * OW));
  MMap GW(out.data(), Co, ckk);
  for (int64_t n = 0; n < N; ++n) {
    im2col(xv.data() + n * Ci * H * W, Ci, H, W, kh, kw, stride, pad, OH, OW, cols.data());
    GW.noalias() += CMap(gv.data() + n * Co * OH * OW, Co, OH * OW) * CMap(cols.data(), ckk, OH * OW).transpose();
  }
  int64_t in_h = H, in_w = W;
  return make_node("conv2d_weight_adj", std::move(out), {x, gy},
                   [stride, pad, in_h, in_w](const Variable& g2, const std::vector<Variable>& in, const Variable&) {
                     Variable g_x = conv2d_input_adj(in[1], g2, stride, pad, in_h, in_w);
                     Variable g_gy = conv2d(in[0], g2, stride, pad);
                     return std::vector<Variable>{g_x, g_gy};
                   });
}

}  // namespace crsynth::ag::ops

#include <algorithm>
#include <cmath>
#include <cstring>

#include "crsynth/autograd/ops.hpp"

namespace crsynth::ag::ops {

namespace {

void require_nchw(const Tensor& t, const char* who) {
  if (t.rank() != 4) throw ShapeError(std::string(who) + ": expects NCHW input, got " + shape_str(t.shape()));
}

struct Lerp {
  int64_t i0, i1;
  double w0, w1;
};

// Half-pixel (align_corners=false) source coordinates.
Lerp lerp_coeff(int64_t out_i, int64_t in_len, int64_t out_len) {
  double src = (static_cast<double>(out_i) + 0.5) * static_cast<double>(in_len) / static_cast<double>(out_len) - 0.5;
  double f = std::floor(src);
  int64_t i0 = static_cast<int64_t>(f);
  double w1 = src - f;
  int64_t i1 = i0 + 1;
  i0 = std::clamp<int64_t>(i0, 0, in_len - 1);
  i1 = std::clamp<int64_t>(i1, 0, in_len - 1);
  return {i0, i1, 1.0 - w1, w1};
}

}  // namespace

Variable pad_replicate(const Variable& x, int p) {
  const Tensor& xv = x.value();
  require_nchw(xv, "pad_replicate");
  int64_t N = xv.shape()[0], C = xv.shape()[1], H = xv.shape()[2], W = xv.shape()[3];
  int64_t OH = H + 2 * p, OW = W + 2 * p;
  Tensor out(Shape{N, C, OH, OW});
  const double* px = xv.data();
  double* po = out.data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const double* src = px + nc * H * W;
    double* dst = po + nc * OH * OW;
    for (int64_t y = 0; y < OH; ++y) {
      int64_t sy = std::clamp<int64_t>(y - p, 0, H - 1);
      for (int64_t x2 = 0; x2 < OW; ++x2) {
        int64_t sx = std::clamp<int64_t>(x2 - p, 0, W - 1);
        dst[y * OW + x2] = src[sy * W + sx];
      }
    }
  }
  return make_node("pad_replicate", std::move(out), {x},
                   [p](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{unpad_replicate(gy, p)};
                   });
}

Variable unpad_replicate(const Variable& gy, int p) {
  const Tensor& gv = gy.value();
  require_nchw(gv, "unpad_replicate");
  int64_t N = gv.shape()[0], C = gv.shape()[1], OH = gv.shape()[2], OW = gv.shape()[3];
  int64_t H = OH - 2 * p, W = OW - 2 * p;
  if (H <= 0 || W <= 0) throw ShapeError("unpad_replicate: padding exceeds extent");
  Tensor out(Shape{N, C, H, W});
  const double* pg = gv.data();
  double* po = out.data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const double* src = pg + nc * OH * OW;
    double* dst = po + nc * H * W;
    for (int64_t y = 0; y < OH; ++y) {
      int64_t sy = std::clamp<int64_t>(y - p, 0, H - 1);
      for (int64_t x2 = 0; x2 < OW; ++x2) {
        int64_t sx = std::clamp<int64_t>(x2 - p, 0, W - 1);
        dst[sy * W + sx] += src[y * OW + x2];
      }
    }
  }
  return make_node("unpad_replicate", std::move(out), {gy},
                   [p](const Variable& g2, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{pad_replicate(g2, p)};
                   });
}

Variable pad_zero(const Variable& x, int p) {
  const Tensor& xv = x.value();
  require_nchw(xv, "pad_zero");
  int64_t N = xv.shape()[0], C = xv.shape()[1], H = xv.shape()[2], W = xv.shape()[3];
  int64_t OH = H + 2 * p, OW = W + 2 * p;
  Tensor out(Shape{N, C, OH, OW});
  const double* px = xv.data();
  double* po = out.data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    for (int64_t y = 0; y < H; ++y) {
      std::memcpy(po + nc * OH * OW + (y + p) * OW + p, px + nc * H * W + y * W,
                  static_cast<size_t>(W) * sizeof(double));
    }
  }
  int64_t ih = H, iw = W;
  return make_node("pad_zero", std::move(out), {x},
                   [p, ih, iw](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{slice(slice(gy, 2, p, ih), 3, p, iw)};
                   });
}

Variable interp_bilinear(const Variable& x, int64_t out_h, int64_t out_w) {
  const Tensor& xv = x.value();
  require_nchw(xv, "interp_bilinear");
  int64_t N = xv.shape()[0], C = xv.shape()[1], H = xv.shape()[2], W = xv.shape()[3];
  if (out_h == H && out_w == W) return x;
  Tensor out(Shape{N, C, out_h, out_w});
  std::vector<Lerp> ly(static_cast<size_t>(out_h)), lx(static_cast<size_t>(out_w));
  for (int64_t y = 0; y < out_h; ++y) ly[static_cast<size_t>(y)] = lerp_coeff(y, H, out_h);
  for (int64_t x2 = 0; x2 < out_w; ++x2) lx[static_cast<size_t>(x2)] = lerp_coeff(x2, W, out_w);
  const double* px = xv.data();
  double* po = out.data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const double* src = px + nc * H * W;
    double* dst = po + nc * out_h * out_w;
    for (int64_t y = 0; y < out_h; ++y) {
      const Lerp& a = ly[static_cast<size_t>(y)];
      for (int64_t x2 = 0; x2 < out_w; ++x2) {
        const Lerp& b = lx[static_cast<size_t>(x2)];
        dst[y * out_w + x2] = a.w0 * (b.w0 * src[a.i0 * W + b.i0] + b.w1 * src[a.i0 * W + b.i1]) +
                              a.w1 * (b.w0 * src[a.i1 * W + b.i0] + b.w1 * src[a.i1 * W + b.i1]);
      }
    }
  }
  int64_t ih = H, iw = W;
  return make_node("interp_bilinear", std::move(out), {x},
                   [ih, iw](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{interp_bilinear_adj(gy, ih, iw)};
                   });
}

Variable interp_bilinear_adj(const Variable& gy, int64_t in_h, int64_t in_w) {
  const Tensor& gv = gy.value();
  require_nchw(gv, "interp_bilinear_adj");
  int64_t N = gv.shape()[0], C = gv.shape()[1], OH = gv.shape()[2], OW = gv.shape()[3];
  Tensor out(Shape{N, C, in_h, in_w});
  std::vector<Lerp> ly(static_cast<size_t>(OH)), lx(static_cast<size_t>(OW));
  for (int64_t y = 0; y < OH; ++y) ly[static_cast<size_t>(y)] = lerp_coeff(y, in_h, OH);
  for (int64_t x2 = 0; x2 < OW; ++x2) lx[static_cast<size_t>(x2)] = lerp_coeff(x2, in_w, OW);
  const double* pg = gv.data();
  double* po = out.data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const double* src = pg + nc * OH * OW;
    double* dst = po + nc * in_h * in_w;
    for (int64_t y = 0; y < OH; ++y) {
      const Lerp& a = ly[static_cast<size_t>(y)];
      for (int64_t x2 = 0; x2 < OW; ++x2) {
        const Lerp& b = lx[static_cast<size_t>(x2)];
        double g = src[y * OW + x2];
        dst[a.i0 * in_w + b.i0] += a.w0 * b.w0 * g;
        dst[a.i0 * in_w + b.i1] += a.w0 * b.w1 * g;
        dst[a.i1 * in_w + b.i0] += a.w1 * b.w0 * g;
        dst[a.i1 * in_w + b.i1] += a.w1 * b.w1 * g;
      }
    }
  }
  int64_t oh = OH, ow = OW;
  return make_node("interp_bilinear_adj", std::move(out), {gy},
                   [oh, ow](const Variable& g2, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{interp_bilinear(g2, oh, ow)};
                   });
}

Variable upsample_nearest(const Variable& x, int factor) {
  const Tensor& xv = x.value();
  require_nchw(xv, "upsample_nearest");
  int64_t N = xv.shape()[0], C = xv.shape()[1], H = xv.shape()[2], W = xv.shape()[3];
  int64_t OH = H * factor, OW = W * factor;
  Tensor out(Shape{N, C, OH, OW});
  const double* px = xv.data();
  double* po = out.data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const double* src = px + nc * H * W;
    double* dst = po + nc * OH * OW;
    for (int64_t y = 0; y < OH; ++y) {
      const double* srow = src + (y / factor) * W;
      double* drow = dst + y * OW;
      for (int64_t x2 = 0; x2 < OW; ++x2) drow[x2] = srow[x2 / factor];
    }
  }
  return make_node("upsample_nearest", std::move(out), {x},
                   [factor](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{sumpool(gy, factor)};
                   });
}

Variable sumpool(const Variable& x, int factor) {
  const Tensor& xv = x.value();
  require_nchw(xv, "sumpool");
  int64_t N = xv.shape()[0], C = xv.shape()[1], H = xv.shape()[2], W = xv.shape()[3];
  if (H % factor != 0 || W % factor != 0) throw ShapeError("sumpool: extent not divisible by factor");
  int64_t OH = H / factor, OW = W / factor;
  Tensor out(Shape{N, C, OH, OW});
  const double* px = xv.data();
  double* po = out.data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const double* src = px + nc * H * W;
    double* dst = po + nc * OH * OW;
    for (int64_t y = 0; y < H; ++y) {
      const double* srow = src + y * W;
      double* drow = dst + (y / factor) * OW;
      for (int64_t x2 = 0; x2 < W; ++x2) drow[x2 / factor] += srow[x2];
    }
  }
  return make_node("sumpool", std::move(out), {x},
                   [factor](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{upsample_nearest(gy, factor)};
                   });
}

Variable avgpool2(const Variable& x) { return mul_scalar(sumpool(x, 2), 0.25); }

}  // namespace crsynth::ag::ops

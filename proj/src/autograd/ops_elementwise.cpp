#include <cmath>

#include "crsynth/autograd/ops.hpp"
#include "ew_detail.hpp"

namespace crsynth::ag::ops {

using detail::ew_binary;
using detail::ew_unary;

Variable reduce_to(const Variable& g, const Shape& target) {
  if (same_shape(g.shape(), target)) return g;
  const Shape& gs = g.shape();
  int gr = static_cast<int>(gs.size());
  int tr = static_cast<int>(target.size());
  // Sum away leading axes, then sum broadcast axes (keepdim), then reshape.
  std::vector<int> axes;
  for (int i = 0; i < gr; ++i) {
    int ti = i - (gr - tr);
    if (ti < 0 || (target[static_cast<size_t>(ti)] == 1 && gs[static_cast<size_t>(i)] != 1)) {
      axes.push_back(i);
    }
  }
  Variable out = axes.empty() ? g : sum_axes(g, axes, /*keepdim=*/true);
  return reshape(out, target);
}

Variable add(const Variable& a, const Variable& b) {
  return make_node("add", ew_binary(a.value(), b.value(), [](double x, double y) { return x + y; }), {a, b},
                   [](const Variable& gy, const std::vector<Variable>& in, const Variable&) {
                     return std::vector<Variable>{reduce_to(gy, in[0].shape()), reduce_to(gy, in[1].shape())};
                   });
}

Variable sub(const Variable& a, const Variable& b) {
  return make_node("sub", ew_binary(a.value(), b.value(), [](double x, double y) { return x - y; }), {a, b},
                   [](const Variable& gy, const std::vector<Variable>& in, const Variable&) {
                     return std::vector<Variable>{reduce_to(gy, in[0].shape()), reduce_to(neg(gy), in[1].shape())};
                   });
}

Variable mul(const Variable& a, const Variable& b) {
  return make_node("mul", ew_binary(a.value(), b.value(), [](double x, double y) { return x * y; }), {a, b},
                   [](const Variable& gy, const std::vector<Variable>& in, const Variable&) {
                     return std::vector<Variable>{reduce_to(mul(gy, in[1]), in[0].shape()),
                                                  reduce_to(mul(gy, in[0]), in[1].shape())};
                   });
}

Variable div(const Variable& a, const Variable& b) {
  return make_node("div", ew_binary(a.value(), b.value(), [](double x, double y) { return x / y; }), {a, b},
                   [](const Variable& gy, const std::vector<Variable>& in, const Variable&) {
                     Variable ga = reduce_to(div(gy, in[1]), in[0].shape());
                     Variable gb = reduce_to(neg(div(mul(gy, in[0]), mul(in[1], in[1]))), in[1].shape());
                     return std::vector<Variable>{ga, gb};
                   });
}

Variable neg(const Variable& x) {
  return make_node("neg", ew_unary(x.value(), [](double v) { return -v; }), {x},
                   [](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{neg(gy)};
                   });
}

Variable add_scalar(const Variable& x, double c) {
  return make_node("add_scalar", ew_unary(x.value(), [c](double v) { return v + c; }), {x},
                   [](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{gy};
                   });
}

Variable mul_scalar(const Variable& x, double c) {
  return make_node("mul_scalar", ew_unary(x.value(), [c](double v) { return v * c; }), {x},
                   [c](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{mul_scalar(gy, c)};
                   });
}

Variable exp(const Variable& x) {
  return make_node("exp", ew_unary(x.value(), [](double v) { return std::exp(v); }), {x},
                   [](const Variable& gy, const std::vector<Variable>&, const Variable& y) {
                     return std::vector<Variable>{mul(gy, y)};
                   });
}

Variable log(const Variable& x) {
  return make_node("log", ew_unary(x.value(), [](double v) { return std::log(v); }), {x},
                   [](const Variable& gy, const std::vector<Variable>& in, const Variable&) {
                     return std::vector<Variable>{div(gy, in[0])};
                   });
}

Variable sqrt(const Variable& x) {
  return make_node("sqrt", ew_unary(x.value(), [](double v) { return std::sqrt(v); }), {x},
                   [](const Variable& gy, const std::vector<Variable>&, const Variable& y) {
                     return std::vector<Variable>{div(mul_scalar(gy, 0.5), y)};
                   });
}

Variable tanh(const Variable& x) {
  return make_node("tanh", ew_unary(x.value(), [](double v) { return std::tanh(v); }), {x},
                   [](const Variable& gy, const std::vector<Variable>&, const Variable& y) {
                     return std::vector<Variable>{mul(gy, add_scalar(neg(square(y)), 1.0))};
                   });
}

Variable sigmoid(const Variable& x) {
  auto fwd = [](double v) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); };
  return make_node("sigmoid", ew_unary(x.value(), fwd), {x},
                   [](const Variable& gy, const std::vector<Variable>&, const Variable& y) {
                     return std::vector<Variable>{mul(gy, mul(y, add_scalar(neg(y), 1.0)))};
                   });
}

Variable softplus(const Variable& x) {
  auto fwd = [](double v) { return std::fmax(v, 0.0) + std::log1p(std::exp(-std::fabs(v))); };
  return make_node("softplus", ew_unary(x.value(), fwd), {x},
                   [](const Variable& gy, const std::vector<Variable>& in, const Variable&) {
                     return std::vector<Variable>{mul(gy, sigmoid(in[0]))};
                   });
}

Variable abs(const Variable& x) {
  Tensor sign(x.shape());
  {
    const double* px = x.value().data();
    double* ps = sign.data();
    for (int64_t i = 0; i < x.numel(); ++i) ps[i] = px[i] >= 0.0 ? 1.0 : -1.0;
  }
  return make_node("abs", ew_unary(x.value(), [](double v) { return std::fabs(v); }), {x},
                   [sign](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{mul(gy, Variable::constant(sign))};
                   });
}

Variable square(const Variable& x) {
  return make_node("square", ew_unary(x.value(), [](double v) { return v * v; }), {x},
                   [](const Variable& gy, const std::vector<Variable>& in, const Variable&) {
                     return std::vector<Variable>{mul(gy, mul_scalar(in[0], 2.0))};
                   });
}

Variable clamp_min(const Variable& x, double lo) {
  Tensor mask(x.shape());
  {
    const double* px = x.value().data();
    double* pm = mask.data();
    for (int64_t i = 0; i < x.numel(); ++i) pm[i] = px[i] >= lo ? 1.0 : 0.0;
  }
  return make_node("clamp_min", ew_unary(x.value(), [lo](double v) { return std::fmax(v, lo); }), {x},
                   [mask](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{mul(gy, Variable::constant(mask))};
                   });
}

Variable pow_scalar(const Variable& x, double p) {
  return make_node("pow_scalar", ew_unary(x.value(), [p](double v) { return std::pow(v, p); }), {x},
                   [p](const Variable& gy, const std::vector<Variable>& in, const Variable&) {
                     return std::vector<Variable>{mul(gy, mul_scalar(pow_scalar(in[0], p - 1.0), p))};
                   });
}

Variable mish(const Variable& x) { return mul(x, tanh(softplus(x))); }

Variable gelu(const Variable& x) {
  // 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
  const double k = 0.7978845608028654;
  Variable inner = mul_scalar(add(x, mul_scalar(mul(x, square(x)), 0.044715)), k);
  return mul_scalar(mul(x, add_scalar(tanh(inner), 1.0)), 0.5);
}

// ---- reductions ----

Variable sum_axes(const Variable& x, std::vector<int> axes, bool keepdim) {
  const Tensor& xv = x.value();
  int rank = xv.rank();
  std::vector<bool> red(static_cast<size_t>(rank), false);
  for (int a : axes) red[static_cast<size_t>(detail::normalize_axis(a, rank))] = true;

  Shape keep_shape(xv.shape());
  Shape out_shape;
  for (int i = 0; i < rank; ++i) {
    if (red[static_cast<size_t>(i)]) {
      keep_shape[static_cast<size_t>(i)] = 1;
    } else {
      out_shape.push_back(xv.shape()[static_cast<size_t>(i)]);
    }
  }
  if (out_shape.empty()) out_shape = {1};

  Tensor acc(keep_shape);
  {
    auto xs = row_major_strides(xv.shape());
    auto ks = row_major_strides(keep_shape);
    std::vector<int64_t> bs(static_cast<size_t>(rank));
    for (int i = 0; i < rank; ++i) {
      bs[static_cast<size_t>(i)] = red[static_cast<size_t>(i)] ? 0 : ks[static_cast<size_t>(i)];
    }
    const double* px = xv.data();
    double* pa = acc.data();
    std::vector<int64_t> idx(static_cast<size_t>(rank), 0);
    int64_t off = 0;
    int64_t n = xv.numel();
    for (int64_t flat = 0; flat < n; ++flat) {
      pa[off] += px[flat];
      for (int ax = rank - 1; ax >= 0; --ax) {
        size_t u = static_cast<size_t>(ax);
        off += bs[u];
        if (++idx[u] < xv.shape()[u]) break;
        off -= bs[u] * xv.shape()[u];
        idx[u] = 0;
      }
    }
  }
  Tensor outv = keepdim ? acc : acc.reshaped(out_shape);
  Shape in_shape = xv.shape();
  return make_node("sum_axes", std::move(outv), {x},
                   [in_shape, keep_shape](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{broadcast_to(reshape(gy, keep_shape), in_shape)};
                   });
}

Variable sum_all(const Variable& x) {
  std::vector<int> axes(static_cast<size_t>(x.value().rank()));
  for (size_t i = 0; i < axes.size(); ++i) axes[i] = static_cast<int>(i);
  return sum_axes(x, axes, /*keepdim=*/false);
}

Variable mean_all(const Variable& x) { return mul_scalar(sum_all(x), 1.0 / static_cast<double>(x.numel())); }

Variable mean_axes(const Variable& x, std::vector<int> axes, bool keepdim) {
  int64_t count = 1;
  int rank = x.value().rank();
  for (int a : axes) count *= x.value().shape()[static_cast<size_t>(detail::normalize_axis(a, rank))];
  return mul_scalar(sum_axes(x, std::move(axes), keepdim), 1.0 / static_cast<double>(count));
}

Variable max_axis(const Variable& x, int axis, bool keepdim) {
  const Tensor& xv = x.value();
  int rank = xv.rank();
  axis = detail::normalize_axis(axis, rank);
  Shape keep_shape(xv.shape());
  keep_shape[static_cast<size_t>(axis)] = 1;
  Shape out_shape;
  for (int i = 0; i < rank; ++i) {
    if (i != axis) out_shape.push_back(xv.shape()[static_cast<size_t>(i)]);
  }
  if (out_shape.empty()) out_shape = {1};

  int64_t axis_len = xv.shape()[static_cast<size_t>(axis)];
  int64_t inner = 1;
  for (int i = axis + 1; i < rank; ++i) inner *= xv.shape()[static_cast<size_t>(i)];
  int64_t outer = xv.numel() / (axis_len * inner);

  Tensor maxv(keep_shape);
  Tensor mask(xv.shape());
  const double* px = xv.data();
  double* pm = maxv.data();
  double* pk = mask.data();
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t i = 0; i < inner; ++i) {
      int64_t base = o * axis_len * inner + i;
      int64_t best = 0;
      double bv = px[base];
      for (int64_t a = 1; a < axis_len; ++a) {
        double v = px[base + a * inner];
        if (v > bv) {
          bv = v;
          best = a;
        }
      }
      pm[o * inner + i] = bv;
      pk[base + best * inner] = 1.0;
    }
  }
  Tensor outv = keepdim ? maxv : maxv.reshaped(out_shape);
  Shape in_shape = xv.shape();
  return make_node("max_axis", std::move(outv), {x},
                   [mask, in_shape, keep_shape](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     Variable g = broadcast_to(reshape(gy, keep_shape), in_shape);
                     return std::vector<Variable>{mul(g, Variable::constant(mask))};
                   });
}

// ---- composites ----

Variable softmax_lastdim(const Variable& x) {
  Variable m = max_axis(x, -1, /*keepdim=*/true);
  Variable e = exp(sub(x, m));
  Variable s = sum_axes(e, {-1}, /*keepdim=*/true);
  return div(e, s);
}

Variable l2_normalize(const Variable& x, int axis, double eps) {
  Variable n2 = sum_axes(square(x), {axis}, /*keepdim=*/true);
  return div(x, sqrt(add_scalar(n2, eps)));
}

Variable dot(const Variable& a, const Variable& b) {
  if (a.numel() != b.numel()) throw ShapeError("dot: size mismatch");
  Shape flat{a.numel()};
  return sum_all(mul(reshape(a, flat), reshape(b, flat)));
}

}  // namespace crsynth::ag::ops

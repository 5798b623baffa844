#include <cstring>

#include "crsynth/autograd/ops.hpp"
#include "ew_detail.hpp"

namespace crsynth::ag::ops {

Variable reshape(const Variable& x, Shape s) {
  if (same_shape(x.shape(), s)) return x;
  Shape in_shape = x.shape();
  return make_node("reshape", x.value().reshaped(s), {x},
                   [in_shape](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{reshape(gy, in_shape)};
                   });
}

Variable permute(const Variable& x, std::vector<int> perm) {
  const Tensor& xv = x.value();
  int rank = xv.rank();
  if (static_cast<int>(perm.size()) != rank) throw ShapeError("permute: rank mismatch");
  Shape os(static_cast<size_t>(rank));
  for (int i = 0; i < rank; ++i) os[static_cast<size_t>(i)] = xv.shape()[static_cast<size_t>(perm[static_cast<size_t>(i)])];

  Tensor out(os);
  auto in_strides = row_major_strides(xv.shape());
  std::vector<int64_t> src_strides(static_cast<size_t>(rank));
  for (int i = 0; i < rank; ++i) src_strides[static_cast<size_t>(i)] = in_strides[static_cast<size_t>(perm[static_cast<size_t>(i)])];

  const double* px = xv.data();
  double* po = out.data();
  std::vector<int64_t> idx(static_cast<size_t>(rank), 0);
  int64_t src = 0;
  int64_t n = out.numel();
  for (int64_t flat = 0; flat < n; ++flat) {
    po[flat] = px[src];
    for (int ax = rank - 1; ax >= 0; --ax) {
      size_t u = static_cast<size_t>(ax);
      src += src_strides[u];
      if (++idx[u] < os[u]) break;
      src -= src_strides[u] * os[u];
      idx[u] = 0;
    }
  }

  std::vector<int> inv(static_cast<size_t>(rank));
  for (int i = 0; i < rank; ++i) inv[static_cast<size_t>(perm[static_cast<size_t>(i)])] = i;
  return make_node("permute", std::move(out), {x},
                   [inv](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{permute(gy, inv)};
                   });
}

namespace {

// Decompose a shape around `axis` into (outer, axis_len, inner).
void axis_split(const Shape& s, int axis, int64_t& outer, int64_t& alen, int64_t& inner) {
  outer = 1;
  inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[static_cast<size_t>(i)];
  alen = s[static_cast<size_t>(axis)];
  for (size_t i = static_cast<size_t>(axis) + 1; i < s.size(); ++i) inner *= s[i];
}

Tensor unslice_value(const Tensor& gy, const Shape& full, int axis, int64_t start) {
  Tensor out(full);
  int64_t outer, alen, inner;
  axis_split(full, axis, outer, alen, inner);
  int64_t slen = gy.shape()[static_cast<size_t>(axis)];
  const double* pg = gy.data();
  double* po = out.data();
  for (int64_t o = 0; o < outer; ++o) {
    std::memcpy(po + (o * alen + start) * inner, pg + o * slen * inner,
                static_cast<size_t>(slen * inner) * sizeof(double));
  }
  return out;
}

}  // namespace

Variable slice(const Variable& x, int axis, int64_t start, int64_t len) {
  const Tensor& xv = x.value();
  axis = detail::normalize_axis(axis, xv.rank());
  int64_t alen = xv.shape()[static_cast<size_t>(axis)];
  if (start < 0 || len < 0 || start + len > alen) throw ShapeError("slice out of range");

  Shape os(xv.shape());
  os[static_cast<size_t>(axis)] = len;
  Tensor out(os);
  int64_t outer, full_alen, inner;
  axis_split(xv.shape(), axis, outer, full_alen, inner);
  const double* px = xv.data();
  double* po = out.data();
  for (int64_t o = 0; o < outer; ++o) {
    std::memcpy(po + o * len * inner, px + (o * full_alen + start) * inner,
                static_cast<size_t>(len * inner) * sizeof(double));
  }
  Shape in_shape = xv.shape();
  return make_node("slice", std::move(out), {x},
                   [in_shape, axis, start](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     Tensor padded = unslice_value(gy.value(), in_shape, axis, start);
                     // unslice is linear; express it as a node so second-order
                     // gradients can pass back through the slice.
                     Variable g = make_node("unslice", std::move(padded), {gy},
                                            [axis, start](const Variable& g2, const std::vector<Variable>& in2,
                                                          const Variable&) {
                                              int64_t len2 = in2[0].shape()[static_cast<size_t>(axis)];
                                              return std::vector<Variable>{slice(g2, axis, start, len2)};
                                            });
                     return std::vector<Variable>{g};
                   });
}

Variable concat(const std::vector<Variable>& xs, int axis) {
  if (xs.empty()) throw ShapeError("concat: empty input list");
  const Tensor& first = xs[0].value();
  axis = detail::normalize_axis(axis, first.rank());
  Shape os(first.shape());
  int64_t total = 0;
  for (const auto& v : xs) {
    const Shape& s = v.value().shape();
    if (s.size() != os.size()) throw ShapeError("concat: rank mismatch");
    for (size_t i = 0; i < s.size(); ++i) {
      if (static_cast<int>(i) != axis && s[i] != os[i]) {
        throw ShapeError("concat: shape mismatch at axis " + std::to_string(i));
      }
    }
    total += s[static_cast<size_t>(axis)];
  }
  os[static_cast<size_t>(axis)] = total;

  Tensor out(os);
  int64_t outer, alen, inner;
  axis_split(os, axis, outer, alen, inner);
  double* po = out.data();
  int64_t cursor = 0;
  for (const auto& v : xs) {
    const Tensor& t = v.value();
    int64_t part = t.shape()[static_cast<size_t>(axis)];
    const double* pt = t.data();
    for (int64_t o = 0; o < outer; ++o) {
      std::memcpy(po + (o * alen + cursor) * inner, pt + o * part * inner,
                  static_cast<size_t>(part * inner) * sizeof(double));
    }
    cursor += part;
  }

  std::vector<int64_t> parts;
  parts.reserve(xs.size());
  for (const auto& v : xs) parts.push_back(v.value().shape()[static_cast<size_t>(axis)]);
  return make_node("concat", std::move(out), xs,
                   [axis, parts](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     std::vector<Variable> gs;
                     gs.reserve(parts.size());
                     int64_t at = 0;
                     for (int64_t p : parts) {
                       gs.push_back(slice(gy, axis, at, p));
                       at += p;
                     }
                     return gs;
                   });
}

Variable broadcast_to(const Variable& x, const Shape& s) {
  if (same_shape(x.shape(), s)) return x;
  Tensor out = detail::ew_binary(x.value(), Tensor::zeros(s), [](double a, double) { return a; });
  if (!same_shape(out.shape(), s)) throw ShapeError("broadcast_to: incompatible shapes");
  Shape in_shape = x.shape();
  return make_node("broadcast_to", std::move(out), {x},
                   [in_shape](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{reduce_to(gy, in_shape)};
                   });
}

Variable gather_rows(const Variable& table, std::vector<int64_t> indices) {
  const Tensor& tv = table.value();
  if (tv.rank() != 2) throw ShapeError("gather_rows: table must be rank 2");
  int64_t rows = tv.shape()[0];
  int64_t cols = tv.shape()[1];
  Tensor out(Shape{static_cast<int64_t>(indices.size()), cols});
  const double* pt = tv.data();
  double* po = out.data();
  for (size_t i = 0; i < indices.size(); ++i) {
    int64_t r = indices[i];
    if (r < 0 || r >= rows) throw ShapeError("gather_rows: index out of range");
    std::memcpy(po + static_cast<int64_t>(i) * cols, pt + r * cols, static_cast<size_t>(cols) * sizeof(double));
  }
  return make_node("gather_rows", std::move(out), {table},
                   [indices, rows](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{scatter_rows(gy, indices, rows)};
                   });
}

Variable scatter_rows(const Variable& rows_in, std::vector<int64_t> indices, int64_t num_rows) {
  const Tensor& rv = rows_in.value();
  if (rv.rank() != 2) throw ShapeError("scatter_rows: rows must be rank 2");
  if (rv.shape()[0] != static_cast<int64_t>(indices.size())) throw ShapeError("scatter_rows: index count mismatch");
  int64_t cols = rv.shape()[1];
  Tensor out(Shape{num_rows, cols});
  const double* pr = rv.data();
  double* po = out.data();
  for (size_t i = 0; i < indices.size(); ++i) {
    int64_t r = indices[i];
    double* dst = po + r * cols;
    const double* src = pr + static_cast<int64_t>(i) * cols;
    for (int64_t c = 0; c < cols; ++c) dst[c] += src[c];
  }
  return make_node("scatter_rows", std::move(out), {rows_in},
                   [indices](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{gather_rows(gy, indices)};
                   });
}

Variable roll2d(const Variable& x, int64_t shift_h, int64_t shift_w) {
  const Tensor& xv = x.value();
  int rank = xv.rank();
  if (rank < 2) throw ShapeError("roll2d requires rank >= 2");
  int64_t H = xv.shape()[static_cast<size_t>(rank - 2)];
  int64_t W = xv.shape()[static_cast<size_t>(rank - 1)];
  int64_t outer = xv.numel() / (H * W);
  auto wrap = [](int64_t v, int64_t m) { return ((v % m) + m) % m; };
  int64_t sh = wrap(shift_h, H);
  int64_t sw = wrap(shift_w, W);

  Tensor out(xv.shape());
  const double* px = xv.data();
  double* po = out.data();
  for (int64_t o = 0; o < outer; ++o) {
    const double* src = px + o * H * W;
    double* dst = po + o * H * W;
    for (int64_t y = 0; y < H; ++y) {
      int64_t sy = wrap(y - sh, H);
      // row rotated by sw: destination row [sw..W) then [0..sw)
      std::memcpy(dst + y * W + sw, src + sy * W, static_cast<size_t>(W - sw) * sizeof(double));
      if (sw > 0) std::memcpy(dst + y * W, src + sy * W + (W - sw), static_cast<size_t>(sw) * sizeof(double));
    }
  }
  return make_node("roll2d", std::move(out), {x},
                   [shift_h, shift_w](const Variable& gy, const std::vector<Variable>&, const Variable&) {
                     return std::vector<Variable>{roll2d(gy, -shift_h, -shift_w)};
                   });
}

}  // namespace crsynth::ag::ops

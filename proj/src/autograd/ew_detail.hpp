#pragma once

#include <algorithm>
#include <cstring>
#include <functional>
#include <vector>

#include "crsynth/core/tensor.hpp"

namespace crsynth::ag::detail {

inline Shape broadcast_shape(const Shape& a, const Shape& b) {
  size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (size_t i = 0; i < r; ++i) {
    int64_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    int64_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

// Strides of `s` when broadcast against an output of rank `rank`; broadcast
// axes get stride 0.
inline std::vector<int64_t> broadcast_strides(const Shape& s, const Shape& out) {
  std::vector<int64_t> st(out.size(), 0);
  auto own = row_major_strides(s);
  size_t off = out.size() - s.size();
  for (size_t i = 0; i < s.size(); ++i) {
    st[off + i] = (s[i] == 1 && out[off + i] != 1) ? 0 : own[i];
  }
  return st;
}

// Elementwise binary with broadcasting.
template <class F>
Tensor ew_binary(const Tensor& a, const Tensor& b, F f) {
  if (same_shape(a.shape(), b.shape())) {
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = f(pa[i], pb[i]);
    return out;
  }
  if (b.numel() == 1) {
    Tensor out(a.shape());
    const double* pa = a.data();
    double bv = b[0];
    double* po = out.data();
    for (int64_t i = 0; i < a.numel(); ++i) po[i] = f(pa[i], bv);
    return out;
  }
  if (a.numel() == 1) {
    Tensor out(b.shape());
    double av = a[0];
    const double* pb = b.data();
    double* po = out.data();
    for (int64_t i = 0; i < b.numel(); ++i) po[i] = f(av, pb[i]);
    return out;
  }
  Shape os = broadcast_shape(a.shape(), b.shape());
  Tensor out(os);
  int rank = static_cast<int>(os.size());
  auto sa = broadcast_strides(a.shape(), os);
  auto sb = broadcast_strides(b.shape(), os);
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();

  int64_t inner = os[static_cast<size_t>(rank - 1)];
  int64_t sai = sa[static_cast<size_t>(rank - 1)];
  int64_t sbi = sb[static_cast<size_t>(rank - 1)];
  int64_t outer = out.numel() / inner;

  std::vector<int64_t> idx(static_cast<size_t>(rank > 0 ? rank - 1 : 0), 0);
  int64_t ao = 0, bo = 0;
  for (int64_t o = 0; o < outer; ++o) {
    const double* ra = pa + ao;
    const double* rb = pb + bo;
    for (int64_t i = 0; i < inner; ++i) {
      *po++ = f(ra[i * sai], rb[i * sbi]);
    }
    // odometer over the outer axes
    for (int ax = rank - 2; ax >= 0; --ax) {
      size_t u = static_cast<size_t>(ax);
      ao += sa[u];
      bo += sb[u];
      if (++idx[u] < os[u]) break;
      ao -= sa[u] * os[u];
      bo -= sb[u] * os[u];
      idx[u] = 0;
    }
  }
  return out;
}

template <class F>
Tensor ew_unary(const Tensor& x, F f) {
  Tensor out(x.shape());
  const double* px = x.data();
  double* po = out.data();
  int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) po[i] = f(px[i]);
  return out;
}

inline int normalize_axis(int axis, int rank) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw ShapeError("axis out of range");
  return axis;
}

}  // namespace crsynth::ag::detail

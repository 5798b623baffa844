#include "crsynth/loss/ssim.hpp"

#include <cmath>

namespace crsynth::loss {

namespace O = ag::ops;
using ag::Variable;

Tensor gaussian_kernel(int64_t size, double sigma) {
  Tensor k(Shape{1, 1, size, size});
  double sum = 0.0;
  double c = (static_cast<double>(size) - 1.0) / 2.0;
  for (int64_t y = 0; y < size; ++y) {
    for (int64_t x = 0; x < size; ++x) {
      double dy = static_cast<double>(y) - c;
      double dx = static_cast<double>(x) - c;
      double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      k.at({0, 0, y, x}) = v;
      sum += v;
    }
  }
  for (int64_t i = 0; i < k.numel(); ++i) k[i] /= sum;
  return k;
}

namespace {

// Per-channel Gaussian blur over valid positions: (N,C,H,W) -> (N,C,OH,OW).
Variable blur(const Variable& x, const Variable& kernel) {
  const Shape& s = x.value().shape();
  Variable flat = O::reshape(x, {s[0] * s[1], 1, s[2], s[3]});
  Variable y = O::conv2d(flat, kernel, 1, 0);
  const Shape& o = y.value().shape();
  return O::reshape(y, {s[0], s[1], o[2], o[3]});
}

}  // namespace

SsimTerms ssim_terms(const Variable& a, const Variable& b, const SsimOptions& opt) {
  const Shape& s = a.value().shape();
  if (!same_shape(s, b.value().shape())) throw ShapeError("ssim: shape mismatch");
  if (s.size() != 4) throw ShapeError("ssim: expects NCHW");
  if (std::min(s[2], s[3]) < opt.window) {
    throw ShapeError("ssim: window " + std::to_string(opt.window) + " larger than image extent " +
                     std::to_string(s[2]) + "x" + std::to_string(s[3]));
  }
  Variable kernel = Variable::constant(gaussian_kernel(opt.window, opt.sigma));
  double c1 = (opt.k1 * opt.data_range) * (opt.k1 * opt.data_range);
  double c2 = (opt.k2 * opt.data_range) * (opt.k2 * opt.data_range);

  Variable mu1 = blur(a, kernel);
  Variable mu2 = blur(b, kernel);
  Variable mu1_sq = O::square(mu1);
  Variable mu2_sq = O::square(mu2);
  Variable mu12 = O::mul(mu1, mu2);
  Variable sigma1_sq = O::sub(blur(O::square(a), kernel), mu1_sq);
  Variable sigma2_sq = O::sub(blur(O::square(b), kernel), mu2_sq);
  Variable sigma12 = O::sub(blur(O::mul(a, b), kernel), mu12);

  Variable lum = O::div(O::add_scalar(O::mul_scalar(mu12, 2.0), c1), O::add_scalar(O::add(mu1_sq, mu2_sq), c1));
  Variable cs = O::div(O::add_scalar(O::mul_scalar(sigma12, 2.0), c2),
                       O::add_scalar(O::add(sigma1_sq, sigma2_sq), c2));
  SsimTerms out;
  out.ssim = O::mean_all(O::mul(lum, cs));
  out.cs = O::mean_all(cs);
  return out;
}

Variable ssim_mean(const Variable& a, const Variable& b, const SsimOptions& opt) { return ssim_terms(a, b, opt).ssim; }

MsSsimResult ms_ssim_value(const Variable& a, const Variable& b, const SsimOptions& opt, int scales) {
  const Shape& s = a.value().shape();
  if (!same_shape(s, b.value().shape())) throw ShapeError("ms_ssim: shape mismatch");
  int64_t min_extent = std::min(s[2], s[3]);

  MsSsimResult res;
  res.window_used = opt.window;
  if (min_extent < opt.window) {
    // Shrink to the largest odd window that fits; below 3 there is no
    // meaningful local statistic left.
    int64_t w = min_extent % 2 == 0 ? min_extent - 1 : min_extent;
    if (w < 3) throw ShapeError("ms_ssim: extent too small for any window");
    res.window_used = w;
    res.reduced = true;
  }
  int max_scales = 1;
  while (max_scales < scales && (min_extent >> max_scales) >= res.window_used) ++max_scales;
  res.scales_used = max_scales;
  if (max_scales < scales) res.reduced = true;

  double wsum = 0.0;
  for (int j = 0; j < max_scales; ++j) wsum += kMsSsimWeights[static_cast<size_t>(j)];

  SsimOptions local = opt;
  local.window = res.window_used;

  Variable acc;
  Variable cur_a = a;
  Variable cur_b = b;
  for (int j = 0; j < max_scales; ++j) {
    SsimTerms terms = ssim_terms(cur_a, cur_b, local);
    double weight = kMsSsimWeights[static_cast<size_t>(j)] / wsum;
    Variable base = j + 1 == max_scales ? terms.ssim : terms.cs;
    Variable factor = O::pow_scalar(O::clamp_min(base, 1e-8), weight);
    acc = acc.defined() ? O::mul(acc, factor) : factor;
    if (j + 1 < max_scales) {
      const Shape& cs = cur_a.value().shape();
      if (cs[2] % 2 != 0 || cs[3] % 2 != 0) {
        cur_a = O::slice(O::slice(cur_a, 2, 0, cs[2] - cs[2] % 2), 3, 0, cs[3] - cs[3] % 2);
        cur_b = O::slice(O::slice(cur_b, 2, 0, cs[2] - cs[2] % 2), 3, 0, cs[3] - cs[3] % 2);
      }
      cur_a = O::avgpool2(cur_a);
      cur_b = O::avgpool2(cur_b);
    }
  }
  res.value = acc;
  return res;
}

}  // namespace crsynth::loss

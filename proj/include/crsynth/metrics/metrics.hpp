#pragma once

#include <string>
#include <vector>

#include "crsynth/core/rng.hpp"
#include "crsynth/core/tensor.hpp"

namespace crsynth::metrics {

// All image metrics operate on unit-range tensors shaped (C,H,W) or (N,C,H,W).

// 10*log10(1/MSE) with peak 1; identical images are capped at 100 dB.
double psnr(const Tensor& gen, const Tensor& ref);
inline constexpr double kPsnrCap = 100.0;

// Windowed SSIM (Gaussian 11x11, sigma 1.5). Throws when the window does not fit.
double ssim(const Tensor& gen, const Tensor& ref);
// Multi-scale SSIM; the window must fit at the base scale.
double ms_ssim(const Tensor& gen, const Tensor& ref);

double mae(const Tensor& gen, const Tensor& ref);
double rmse(const Tensor& gen, const Tensor& ref);

// Frechet distance between Gaussian fits of two feature sets, each (n, dim).
// Matrix square root via eigendecomposition of the symmetrized product;
// negative eigenvalues and tiny negative totals are clamped at zero.
double fid(const Tensor& features_a, const Tensor& features_b);

// Frozen random conv embedder mapping images to feature vectors for FID.
class FeatureEmbedder {
 public:
  FeatureEmbedder(uint64_t seed, int64_t in_channels, int64_t out_dim);
  std::vector<double> embed(const Tensor& image_chw) const;  // unit-range (C,H,W)
  Tensor embed_all(const std::vector<Tensor>& images) const; // -> (n, out_dim)
  int64_t dim() const { return out_dim_; }
  std::string provenance() const { return "fixed-random"; }

 private:
  int64_t in_channels_, out_dim_;
  std::vector<Tensor> conv_weights_;
  Tensor proj_;  // (out_dim, last_width)
};

}  // namespace crsynth::metrics

#pragma once

#include "crsynth/autograd/ops.hpp"

namespace crsynth::loss {

struct SsimOptions {
  int64_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

// Normalized 2-D Gaussian window as a (1,1,size,size) kernel.
Tensor gaussian_kernel(int64_t size, double sigma);

struct SsimTerms {
  ag::Variable ssim;  // mean l*cs over valid windows
  ag::Variable cs;    // mean contrast-structure term
};

// Windowed SSIM statistics over valid (unpadded) positions, channels treated
// independently. Inputs must share shape and be at least window-sized.
SsimTerms ssim_terms(const ag::Variable& a, const ag::Variable& b, const SsimOptions& opt);

ag::Variable ssim_mean(const ag::Variable& a, const ag::Variable& b, const SsimOptions& opt);

struct MsSsimResult {
  ag::Variable value;
  int scales_used = 0;
  int64_t window_used = 0;
  bool reduced = false;  // scale count or window had to shrink to fit
};

inline constexpr std::array<double, 5> kMsSsimWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

// Multi-scale SSIM: contrast-structure terms at every scale, luminance at the
// coarsest, combined as a weighted geometric mean (weights renormalized when
// fewer than `scales` levels fit). On tiny inputs the window shrinks to the
// largest odd size that fits and the reduction is flagged.
MsSsimResult ms_ssim_value(const ag::Variable& a, const ag::Variable& b, const SsimOptions& opt, int scales = 5);

}  // namespace crsynth::loss

#pragma once

#include "crsynth/nn/layers.hpp"

namespace crsynth::nn {

// Persistent power-iteration vectors for one weight matrix.
struct SpectralState {
  Tensor u;  // (rows)
  Tensor v;  // (cols)
  bool initialized = false;
};

// Runs `iters` power-iteration steps on the matrix value, updating the state
// in place, and returns the spectral-norm estimate u^T W v.
double spectral_power_iteration(const Tensor& w2d, int iters, SpectralState& state, double eps = 1e-12);

// Weight divided by its estimated top singular value. Updates state in place.
// A zero matrix is returned unchanged (sigma guarded by eps).
Tensor spectral_normalize(const Tensor& w2d, int iters, SpectralState& state, double eps = 1e-12);

// Graph-op version used inside layers: sigma is computed from the current
// state vectors (held constant) so gradients flow through W / sigma(W).
ag::Variable spectral_normalize_var(const ag::Variable& w, const SpectralState& state, double eps = 1e-12);

// Conv2d whose weight is spectrally normalized. Power iteration runs on every
// training-mode forward; evaluation reuses the stored vectors.
class SNConv2d : public Module {
 public:
  SNConv2d(int64_t in_ch, int64_t out_ch, int64_t kernel, int stride, int pad, Rng& rng, int power_iters = 1);
  ag::Variable forward(const ag::Variable& x);

 private:
  int64_t in_ch_, out_ch_, kernel_;
  int stride_, pad_, power_iters_;
  ag::Variable weight_;
  ag::Variable bias_;
  Tensor& u_;
  Tensor& v_;
};

}  // namespace crsynth::nn

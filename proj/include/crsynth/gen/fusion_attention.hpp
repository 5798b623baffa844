#pragma once

#include "crsynth/nn/layers.hpp"

namespace crsynth::gen {

using ag::Variable;

// Joint linear-style attention over two equally shaped feature maps. Queries
// and keys from both inputs are concatenated along the channel axis and
// L2-normalized per spatial position; each input keeps its own values. The
// attention output is scaled by 1/(H*W) and added back through a learnable
// scalar gamma, so gamma = 0 is the exact identity.
class FusionAttention : public nn::Module {
 public:
  FusionAttention(int64_t channels, int64_t qk_channels, double gamma_init, Rng& rng);

  std::pair<Variable, Variable> forward(const Variable& in1, const Variable& in2) const;

  const Variable& gamma() const { return gamma_; }
  // Copies input-1 projection weights into input-2; used by the symmetry tests.
  void tie_projections();

 private:
  nn::Conv2d q1_, k1_, v1_;
  nn::Conv2d q2_, k2_, v2_;
  Variable gamma_;
};

}  // namespace crsynth::gen

#pragma once

#include <array>
#include <memory>

#include "crsynth/config.hpp"
#include "crsynth/nn/layers.hpp"

namespace crsynth::gen {

using ag::Variable;

// (N,C,H,W) -> (N * num_windows, window*window, C). Requires H, W divisible
// by the window size.
Variable window_partition(const Variable& x, int64_t window);
// Exact inverse of window_partition.
Variable window_reverse(const Variable& tokens, int64_t window, int64_t n, int64_t h, int64_t w);

// Window attention with cosine-similarity logits divided by a learnable
// per-head temperature (clamped below at 0.01) plus a relative position bias.
class WindowAttention : public nn::Module {
 public:
  WindowAttention(int64_t dim, int64_t heads, int64_t window, Rng& rng);

  // tokens: (B*num_windows, T, C); mask, when present: (num_windows, T, T)
  // additive logits. windows_per_image is needed to broadcast the mask.
  Variable forward(const Variable& tokens, const Tensor* mask, int64_t windows_per_image) const;

  // Row-stochasticity probe for tests: softmax probabilities of one forward.
  Variable attention_probs(const Variable& tokens) const;

 private:
  Variable logits(const Variable& tokens, const Tensor* mask, int64_t windows_per_image) const;

  int64_t dim_, heads_, window_;
  nn::Linear qkv_, proj_;
  Variable tau_;        // per-head temperature
  Variable rel_table_;  // ((2w-1)^2, heads)
  std::vector<int64_t> rel_index_;
};

class SwinBlock : public nn::Module {
 public:
  SwinBlock(int64_t dim, int64_t heads, int64_t window, int64_t shift, Rng& rng);
  Variable forward(const Variable& x) const;  // NCHW, residual post-norm

 private:
  int64_t dim_, window_, shift_;
  WindowAttention attn_;
  nn::LayerNorm norm1_, norm2_;
  nn::Linear mlp_in_, mlp_out_;
};

// 2x2 space-to-depth, layer norm, linear 4C -> 2C.
class PatchMerging : public nn::Module {
 public:
  PatchMerging(int64_t dim, Rng& rng);
  Variable forward(const Variable& x) const;

 private:
  nn::LayerNorm norm_;
  nn::Linear reduce_;
};

// Four stages of windowed cosine attention with patch merging in between;
// emits feature maps at 1/1, 1/2, 1/4 and 1/8 of the input resolution with
// channel widths doubling per stage.
class SwinBackbone : public nn::Module {
 public:
  SwinBackbone(int64_t in_channels, const GeneratorConfig& cfg, Rng& rng);
  std::array<Variable, 4> forward(const Variable& x) const;

 private:
  int64_t window_;
  nn::Conv2d embed_;
  nn::LayerNorm embed_norm_;
  std::vector<std::unique_ptr<SwinBlock>> blocks_;
  std::array<int, 4> stage_sizes_{};
  std::vector<std::unique_ptr<PatchMerging>> merges_;
};

}  // namespace crsynth::gen

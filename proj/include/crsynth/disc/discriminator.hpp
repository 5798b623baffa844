#pragma once

#include <memory>

#include "crsynth/config.hpp"
#include "crsynth/nn/spectral_norm.hpp"

namespace crsynth::disc {

using ag::Variable;

// Patch scores per scale; extents strictly decrease across scales.
struct ScoreMaps {
  std::vector<Variable> maps;
  // Mean score per scale, averaged over scales: the combination used by the
  // real/fake loss terms.
  Variable mean_of_scale_means() const;
  // Per-sample sum of per-scale mean scores: the critic value the gradient
  // penalty differentiates. Shape (N).
  Variable per_sample_score() const;
};

// Common surface for the designed discriminator and the ablation variant.
class Critic : public nn::Module {
 public:
  virtual ~Critic() = default;
  // stack: channel concatenation (candidate, S1_T1, S1_T2, S2_T1).
  virtual ScoreMaps score_stack(const Variable& stack) = 0;
  virtual int64_t stack_channels() const = 0;
  virtual int n_scales() const = 0;
};

// One critic pyramid: strided spectrally normalized convs with batch norm and
// Mish, channel attention after the second stage and spatial attention after
// the third, and a 1-channel head. Outputs are unbounded patch scores.
class SubDiscriminator : public nn::Module {
 public:
  SubDiscriminator(const DiscriminatorConfig& cfg, Rng& rng);
  Variable forward(const Variable& x);

 private:
  std::vector<std::unique_ptr<nn::SNConv2d>> convs_;
  std::vector<std::unique_ptr<nn::BatchNorm2d>> bnorms_;
  std::vector<std::unique_ptr<nn::InstanceNorm2d>> inorms_;
  std::unique_ptr<nn::ChannelAttention> channel_att_;
  std::unique_ptr<nn::SpatialAttention> spatial_att_;
  std::unique_ptr<nn::SNConv2d> head_;
};

// Three sub-discriminators over the conditioned stack at scale factors
// 1, 0.5 and 0.25 (bilinear).
class MultiScaleDiscriminator : public Critic {
 public:
  MultiScaleDiscriminator(const DiscriminatorConfig& cfg, Rng& rng);

  static Variable make_stack(const Variable& candidate, const Variable& s1_t1, const Variable& s1_t2,
                             const Variable& s2_t1);
  // The single shared resize routine used for the 0.5 / 0.25 scales.
  static Variable downsample(const Variable& stack, int64_t divisor);

  ScoreMaps forward(const Variable& candidate, const Variable& s1_t1, const Variable& s1_t2, const Variable& s2_t1);
  ScoreMaps score_stack(const Variable& stack) override;
  int64_t stack_channels() const override { return cfg_.in_channels; }
  int n_scales() const override { return 3; }

 private:
  DiscriminatorConfig cfg_;
  SubDiscriminator d1_, d2_, d3_;
};

// Single-scale patch critic in the style of earlier conditional GAN work:
// strided convs, batch norm, leaky ReLU, no spectral norm, no attention.
class AltDiscriminator : public Critic {
 public:
  AltDiscriminator(const DiscriminatorConfig& cfg, Rng& rng);
  ScoreMaps score_stack(const Variable& stack) override;
  int64_t stack_channels() const override { return in_channels_; }
  int n_scales() const override { return 1; }

 private:
  int64_t in_channels_;
  std::vector<std::unique_ptr<nn::Conv2d>> convs_;
  std::vector<std::unique_ptr<nn::BatchNorm2d>> norms_;
  std::unique_ptr<nn::Conv2d> head_;
};

}  // namespace crsynth::disc

#pragma once

#include "crsynth/nn/layers.hpp"

namespace crsynth::gen {

using ag::Variable;

/// Replication padding (size 1) -> 3x3 convolution -> Mish.
class MiniConvMish : public nn::Module {
 public:
  MiniConvMish(int64_t in_ch, int64_t out_ch, Rng& rng);
  Variable forward(const Variable& x) const;

 private:
  nn::Conv2d conv_;
};

/// MiniConvMish with an instance-normalization stage: conv -> IN -> Mish.
class ConvMishBlock : public nn::Module {
 public:
  ConvMishBlock(int64_t in_ch, int64_t out_ch, Rng& rng);
  Variable forward(const Variable& x) const;
  // Pre-activation map after normalization; exposed for the statistics tests.
  Variable normalized_preactivation(const Variable& x) const;

 private:
  nn::Conv2d conv_;
  nn::InstanceNorm2d norm_;
};

/// MiniConvMish followed by a 1x1 convolution and Tanh; the generator head.
class ExtendedConvBlock : public nn::Module {
 public:
  ExtendedConvBlock(int64_t in_ch, int64_t out_ch, Rng& rng);
  Variable forward(const Variable& x) const;

 private:
  MiniConvMish body_;
  nn::Conv2d head_;
};

// One residual step of the DownUp block: a strided (or transposed) conv with
// instance norm and Mish, plus a projected skip.
class DownUnit : public nn::Module {
 public:
  DownUnit(int64_t in_ch, int64_t out_ch, Rng& rng);
  Variable forward(const Variable& x) const;

 private:
  nn::Conv2d conv_;
  nn::Conv2d skip_;
  nn::InstanceNorm2d norm_;
};

class UpUnit : public nn::Module {
 public:
  UpUnit(int64_t in_ch, int64_t out_ch, Rng& rng);
  Variable forward(const Variable& x) const;

 private:
  nn::ConvTranspose2d conv_;
  nn::Conv2d skip_;
  nn::InstanceNorm2d norm_;
};

/// Two 2x down-sampling residual units followed by two 2x up-sampling ones;
/// spatial extent is preserved end to end.
class DownUpBlock : public nn::Module {
 public:
  DownUpBlock(int64_t in_ch, int64_t out_ch, Rng& rng);
  Variable forward(const Variable& x) const;

 private:
  DownUnit down1_, down2_;
  UpUnit up1_, up2_;
};

}  // namespace crsynth::gen

#pragma once

#include "crsynth/autograd/ops.hpp"
#include "crsynth/core/rng.hpp"
#include "crsynth/nn/module.hpp"

namespace crsynth::nn {

using ag::Variable;

// Weight initializers (deterministic given the rng stream).
Tensor he_normal(Shape shape, int64_t fan_in, Rng& rng);
Tensor xavier_uniform(Shape shape, int64_t fan_in, int64_t fan_out, Rng& rng);

enum class PadMode { Zero, Replicate };

class Conv2d : public Module {
 public:
  Conv2d(int64_t in_ch, int64_t out_ch, int64_t kernel, int stride, int pad, PadMode mode, bool bias, Rng& rng);
  Variable forward(const Variable& x) const;
  int64_t in_channels() const { return in_ch_; }

 private:
  int64_t in_ch_, kernel_;
  int stride_, pad_;
  PadMode mode_;
  Variable weight_;
  Variable bias_;
  bool has_bias_;
};

// Transposed convolution; upscales spatial extent by `stride`.
class ConvTranspose2d : public Module {
 public:
  ConvTranspose2d(int64_t in_ch, int64_t out_ch, int64_t kernel, int stride, int pad, Rng& rng);
  Variable forward(const Variable& x) const;

 private:
  int64_t kernel_;
  int stride_, pad_;
  Variable weight_;  // (in, out, k, k), the weight of the convolution being transposed
  Variable bias_;
};

class InstanceNorm2d : public Module {
 public:
  explicit InstanceNorm2d(int64_t channels, double eps = 1e-5);
  Variable forward(const Variable& x) const;

 private:
  double eps_;
  Variable gamma_, beta_;
};

class BatchNorm2d : public Module {
 public:
  explicit BatchNorm2d(int64_t channels, double eps = 1e-5, double momentum = 0.1);
  Variable forward(const Variable& x);

 private:
  int64_t channels_;
  double eps_, momentum_;
  Variable gamma_, beta_;
  Tensor& running_mean_;
  Tensor& running_var_;
};

// Normalizes over the last axis.
class LayerNorm : public Module {
 public:
  explicit LayerNorm(int64_t dim, double eps = 1e-5);
  Variable forward(const Variable& x) const;

 private:
  double eps_;
  Variable gamma_, beta_;
};

class Linear : public Module {
 public:
  Linear(int64_t in, int64_t out, Rng& rng, bool bias = true);
  Variable forward(const Variable& x) const;  // (..., in) -> (..., out)

 private:
  int64_t in_, out_;
  Variable weight_;  // (out, in)
  Variable bias_;
  bool has_bias_;
};

class Dropout : public Module {
 public:
  explicit Dropout(double p) : p_(p) {}
  Variable forward(const Variable& x, Rng& rng) const;
  double rate() const { return p_; }

 private:
  double p_;
};

// Squeeze-excitation style gate: global average pool -> bottleneck -> sigmoid.
class ChannelAttention : public Module {
 public:
  ChannelAttention(int64_t channels, int64_t reduction, Rng& rng);
  Variable forward(const Variable& x) const;

 private:
  Linear fc1_, fc2_;
};

// Channel mean+max pooled maps -> 7x7 conv -> sigmoid gate.
class SpatialAttention : public Module {
 public:
  explicit SpatialAttention(Rng& rng, int64_t kernel = 7);
  Variable forward(const Variable& x) const;

 private:
  Conv2d conv_;
};

}  // namespace crsynth::nn

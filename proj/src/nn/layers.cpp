#include "crsynth/nn/layers.hpp"

#include <cmath>

namespace crsynth::nn {

namespace O = ag::ops;

Tensor he_normal(Shape shape, int64_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = std * rng.normal();
  return t;
}

Tensor xavier_uniform(Shape shape, int64_t fan_in, int64_t fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-limit, limit);
  return t;
}

// ---- Conv2d ----

Conv2d::Conv2d(int64_t in_ch, int64_t out_ch, int64_t kernel, int stride, int pad, PadMode mode, bool bias, Rng& rng)
    : in_ch_(in_ch),
      kernel_(kernel),
      stride_(stride),
      pad_(pad),
      mode_(mode),
      weight_(register_parameter("weight", he_normal({out_ch, in_ch, kernel, kernel}, in_ch * kernel * kernel, rng))),
      bias_(bias ? register_parameter("bias", Tensor::zeros({out_ch})) : Variable()),
      has_bias_(bias) {}

Variable Conv2d::forward(const Variable& x) const {
  if (x.value().rank() != 4 || x.value().shape()[1] != in_ch_) {
    throw ConfigError("Conv2d: input " + shape_str(x.value().shape()) + " does not provide " +
                      std::to_string(in_ch_) + " channels");
  }
  Variable h = x;
  int pad = pad_;
  if (mode_ == PadMode::Replicate && pad_ > 0) {
    h = O::pad_replicate(h, pad_);
    pad = 0;
  }
  Variable y = O::conv2d(h, weight_, stride_, pad);
  if (has_bias_) y = O::add(y, O::reshape(bias_, {1, bias_.numel(), 1, 1}));
  return y;
}

// ---- ConvTranspose2d ----

ConvTranspose2d::ConvTranspose2d(int64_t in_ch, int64_t out_ch, int64_t kernel, int stride, int pad, Rng& rng)
    : kernel_(kernel),
      stride_(stride),
      pad_(pad),
      weight_(register_parameter("weight", he_normal({in_ch, out_ch, kernel, kernel}, in_ch * kernel * kernel, rng))),
      bias_(register_parameter("bias", Tensor::zeros({out_ch}))) {}

Variable ConvTranspose2d::forward(const Variable& x) const {
  const Shape& s = x.value().shape();
  int64_t oh = s[2] * stride_;
  int64_t ow = s[3] * stride_;
  Variable y = O::conv2d_input_adj(x, weight_, stride_, pad_, oh, ow);
  return O::add(y, O::reshape(bias_, {1, bias_.numel(), 1, 1}));
}

// ---- InstanceNorm2d ----

InstanceNorm2d::InstanceNorm2d(int64_t channels, double eps)
    : eps_(eps),
      gamma_(register_parameter("gamma", Tensor::ones({channels}))),
      beta_(register_parameter("beta", Tensor::zeros({channels}))) {}

Variable InstanceNorm2d::forward(const Variable& x) const {
  const Shape& s = x.value().shape();
  if (s.size() != 4) throw ShapeError("InstanceNorm2d: expects NCHW");
  if (s[2] * s[3] < 2) {
    throw ShapeError("InstanceNorm2d: spatial extent " + std::to_string(s[2]) + "x" + std::to_string(s[3]) +
                     " leaves instance statistics undefined");
  }
  Variable mu = O::mean_axes(x, {2, 3}, true);
  Variable centered = O::sub(x, mu);
  Variable var = O::mean_axes(O::square(centered), {2, 3}, true);
  Variable xhat = O::div(centered, O::sqrt(O::add_scalar(var, eps_)));
  Variable g = O::reshape(gamma_, {1, gamma_.numel(), 1, 1});
  Variable b = O::reshape(beta_, {1, beta_.numel(), 1, 1});
  return O::add(O::mul(xhat, g), b);
}

// ---- BatchNorm2d ----

BatchNorm2d::BatchNorm2d(int64_t channels, double eps, double momentum)
    : channels_(channels),
      eps_(eps),
      momentum_(momentum),
      gamma_(register_parameter("gamma", Tensor::ones({channels}))),
      beta_(register_parameter("beta", Tensor::zeros({channels}))),
      running_mean_(register_buffer("running_mean", Tensor::zeros({channels}))),
      running_var_(register_buffer("running_var", Tensor::ones({channels}))) {}

Variable BatchNorm2d::forward(const Variable& x) {
  const Shape& s = x.value().shape();
  if (s.size() != 4 || s[1] != channels_) throw ShapeError("BatchNorm2d: bad input " + shape_str(s));
  Variable g = O::reshape(gamma_, {1, channels_, 1, 1});
  Variable b = O::reshape(beta_, {1, channels_, 1, 1});
  if (is_training()) {
    Variable mu = O::mean_axes(x, {0, 2, 3}, true);
    Variable centered = O::sub(x, mu);
    Variable var = O::mean_axes(O::square(centered), {0, 2, 3}, true);
    {
      ag::NoGradGuard ng;
      int64_t n = s[0] * s[2] * s[3];
      double unbias = n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
      for (int64_t c = 0; c < channels_; ++c) {
        running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mu.value()[c];
        running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * var.value()[c] * unbias;
      }
    }
    Variable xhat = O::div(centered, O::sqrt(O::add_scalar(var, eps_)));
    return O::add(O::mul(xhat, g), b);
  }
  Variable mu = Variable::constant(running_mean_.reshaped({1, channels_, 1, 1}));
  Variable var = Variable::constant(running_var_.reshaped({1, channels_, 1, 1}));
  Variable xhat = O::div(O::sub(x, mu), O::sqrt(O::add_scalar(var, eps_)));
  return O::add(O::mul(xhat, g), b);
}

// ---- LayerNorm ----

LayerNorm::LayerNorm(int64_t dim, double eps)
    : eps_(eps),
      gamma_(register_parameter("gamma", Tensor::ones({dim}))),
      beta_(register_parameter("beta", Tensor::zeros({dim}))) {}

Variable LayerNorm::forward(const Variable& x) const {
  Variable mu = O::mean_axes(x, {-1}, true);
  Variable centered = O::sub(x, mu);
  Variable var = O::mean_axes(O::square(centered), {-1}, true);
  Variable xhat = O::div(centered, O::sqrt(O::add_scalar(var, eps_)));
  return O::add(O::mul(xhat, gamma_), beta_);
}

// ---- Linear ----

Linear::Linear(int64_t in, int64_t out, Rng& rng, bool bias)
    : in_(in),
      out_(out),
      weight_(register_parameter("weight", xavier_uniform({out, in}, in, out, rng))),
      bias_(bias ? register_parameter("bias", Tensor::zeros({out})) : Variable()),
      has_bias_(bias) {}

Variable Linear::forward(const Variable& x) const {
  const Shape& s = x.value().shape();
  if (s.back() != in_) throw ShapeError("Linear: expected trailing dim " + std::to_string(in_));
  Shape out_shape(s);
  out_shape.back() = out_;
  Variable flat = O::reshape(x, {x.numel() / in_, in_});
  Variable y = O::matmul(flat, O::permute(weight_, {1, 0}));
  if (has_bias_) y = O::add(y, O::reshape(bias_, {1, out_}));
  return O::reshape(y, out_shape);
}

// ---- Dropout ----

Variable Dropout::forward(const Variable& x, Rng& rng) const {
  if (!is_training() || p_ <= 0.0) return x;
  Tensor mask(x.value().shape());
  double keep = 1.0 - p_;
  for (int64_t i = 0; i < mask.numel(); ++i) mask[i] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  return O::mul(x, Variable::constant(mask));
}

// ---- attention gates ----

ChannelAttention::ChannelAttention(int64_t channels, int64_t reduction, Rng& rng)
    : fc1_(channels, std::max<int64_t>(1, channels / reduction), rng),
      fc2_(std::max<int64_t>(1, channels / reduction), channels, rng) {
  register_module("fc1", fc1_);
  register_module("fc2", fc2_);
}

Variable ChannelAttention::forward(const Variable& x) const {
  const Shape& s = x.value().shape();
  Variable pooled = O::reshape(O::mean_axes(x, {2, 3}, false), {s[0], s[1]});
  Variable gate = O::sigmoid(fc2_.forward(O::mish(fc1_.forward(pooled))));
  return O::mul(x, O::reshape(gate, {s[0], s[1], 1, 1}));
}

SpatialAttention::SpatialAttention(Rng& rng, int64_t kernel)
    : conv_(2, 1, kernel, 1, static_cast<int>(kernel / 2), PadMode::Zero, true, rng) {
  register_module("conv", conv_);
}

Variable SpatialAttention::forward(const Variable& x) const {
  Variable mean_map = O::mean_axes(x, {1}, true);
  Variable max_map = O::max_axis(x, 1, true);
  Variable gate = O::sigmoid(conv_.forward(O::concat({mean_map, max_map}, 1)));
  return O::mul(x, gate);
}

}  // namespace crsynth::nn

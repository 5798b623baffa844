#include "crsynth/gen/blocks.hpp"

namespace crsynth::gen {

namespace O = ag::ops;

MiniConvMish::MiniConvMish(int64_t in_ch, int64_t out_ch, Rng& rng)
    : conv_(in_ch, out_ch, 3, 1, 1, nn::PadMode::Replicate, true, rng) {
  register_module("conv", conv_);
}

Variable MiniConvMish::forward(const Variable& x) const { return O::mish(conv_.forward(x)); }

ConvMishBlock::ConvMishBlock(int64_t in_ch, int64_t out_ch, Rng& rng)
    : conv_(in_ch, out_ch, 3, 1, 1, nn::PadMode::Replicate, true, rng), norm_(out_ch) {
  register_module("conv", conv_);
  register_module("norm", norm_);
}

Variable ConvMishBlock::normalized_preactivation(const Variable& x) const { return norm_.forward(conv_.forward(x)); }

Variable ConvMishBlock::forward(const Variable& x) const { return O::mish(normalized_preactivation(x)); }

ExtendedConvBlock::ExtendedConvBlock(int64_t in_ch, int64_t out_ch, Rng& rng)
    : body_(in_ch, in_ch, rng), head_(in_ch, out_ch, 1, 1, 0, nn::PadMode::Zero, true, rng) {
  register_module("body", body_);
  register_module("head", head_);
}

Variable ExtendedConvBlock::forward(const Variable& x) const { return O::tanh(head_.forward(body_.forward(x))); }

DownUnit::DownUnit(int64_t in_ch, int64_t out_ch, Rng& rng)
    : conv_(in_ch, out_ch, 3, 2, 1, nn::PadMode::Zero, true, rng),
      skip_(in_ch, out_ch, 1, 2, 0, nn::PadMode::Zero, false, rng),
      norm_(out_ch) {
  register_module("conv", conv_);
  register_module("skip", skip_);
  register_module("norm", norm_);
}

Variable DownUnit::forward(const Variable& x) const {
  return O::mish(O::add(norm_.forward(conv_.forward(x)), skip_.forward(x)));
}

UpUnit::UpUnit(int64_t in_ch, int64_t out_ch, Rng& rng)
    : conv_(in_ch, out_ch, 3, 2, 1, rng), skip_(in_ch, out_ch, 1, 1, 0, nn::PadMode::Zero, false, rng), norm_(out_ch) {
  register_module("conv", conv_);
  register_module("skip", skip_);
  register_module("norm", norm_);
}

Variable UpUnit::forward(const Variable& x) const {
  Variable skip = skip_.forward(O::upsample_nearest(x, 2));
  return O::mish(O::add(norm_.forward(conv_.forward(x)), skip));
}

DownUpBlock::DownUpBlock(int64_t in_ch, int64_t out_ch, Rng& rng)
    : down1_(in_ch, out_ch, rng),
      down2_(out_ch, 2 * out_ch, rng),
      up1_(2 * out_ch, out_ch, rng),
      up2_(out_ch, out_ch, rng) {
  register_module("down1", down1_);
  register_module("down2", down2_);
  register_module("up1", up1_);
  register_module("up2", up2_);
}

Variable DownUpBlock::forward(const Variable& x) const {
  const Shape& s = x.value().shape();
  if (s.size() != 4) throw ShapeError("DownUpBlock: expects NCHW input");
  if (s[2] % 4 != 0) {
    throw ShapeError("DownUpBlock: height " + std::to_string(s[2]) + " is not divisible by 4");
  }
  if (s[3] % 4 != 0) {
    throw ShapeError("DownUpBlock: width " + std::to_string(s[3]) + " is not divisible by 4");
  }
  return up2_.forward(up1_.forward(down2_.forward(down1_.forward(x))));
}

}  // namespace crsynth::gen

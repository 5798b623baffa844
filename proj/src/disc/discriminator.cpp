#include "crsynth/disc/discriminator.hpp"

namespace crsynth::disc {

namespace O = ag::ops;

Variable ScoreMaps::mean_of_scale_means() const {
  if (maps.empty()) throw ShapeError("ScoreMaps: empty");
  Variable acc;
  for (const auto& m : maps) {
    Variable v = O::mean_all(m);
    acc = acc.defined() ? O::add(acc, v) : v;
  }
  return O::mul_scalar(acc, 1.0 / static_cast<double>(maps.size()));
}

Variable ScoreMaps::per_sample_score() const {
  if (maps.empty()) throw ShapeError("ScoreMaps: empty");
  Variable acc;
  for (const auto& m : maps) {
    const Shape& s = m.value().shape();
    Variable v = O::mean_axes(O::reshape(m, {s[0], s[1] * s[2] * s[3]}), {1}, false);
    acc = acc.defined() ? O::add(acc, v) : v;
  }
  return acc;
}

SubDiscriminator::SubDiscriminator(const DiscriminatorConfig& cfg, Rng& rng) {
  int64_t in_ch = cfg.in_channels;
  for (size_t i = 0; i < cfg.widths.size(); ++i) {
    int64_t out_ch = cfg.widths[i];
    convs_.push_back(std::make_unique<nn::SNConv2d>(in_ch, out_ch, 4, 2, 1, rng, cfg.spectral_norm_iters));
    register_module("conv" + std::to_string(i), *convs_.back());
    if (i > 0) {
      // First layer runs without normalization, as is conventional for
      // critics fed raw images.
      if (cfg.use_batch_norm) {
        bnorms_.push_back(std::make_unique<nn::BatchNorm2d>(out_ch));
        register_module("bn" + std::to_string(i), *bnorms_.back());
        inorms_.push_back(nullptr);
      } else {
        inorms_.push_back(std::make_unique<nn::InstanceNorm2d>(out_ch));
        register_module("in" + std::to_string(i), *inorms_.back());
        bnorms_.push_back(nullptr);
      }
    } else {
      bnorms_.push_back(nullptr);
      inorms_.push_back(nullptr);
    }
    if (i == 1) {
      channel_att_ = std::make_unique<nn::ChannelAttention>(out_ch, 8, rng);
      register_module("channel_att", *channel_att_);
    }
    if (i == 2) {
      spatial_att_ = std::make_unique<nn::SpatialAttention>(rng);
      register_module("spatial_att", *spatial_att_);
    }
    in_ch = out_ch;
  }
  head_ = std::make_unique<nn::SNConv2d>(in_ch, 1, 3, 1, 1, rng, cfg.spectral_norm_iters);
  register_module("head", *head_);
}

Variable SubDiscriminator::forward(const Variable& x) {
  Variable h = x;
  for (size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i]->forward(h);
    if (bnorms_[i]) h = bnorms_[i]->forward(h);
    if (inorms_[i]) h = inorms_[i]->forward(h);
    h = O::mish(h);
    if (i == 1 && channel_att_) h = channel_att_->forward(h);
    if (i == 2 && spatial_att_) h = spatial_att_->forward(h);
  }
  return head_->forward(h);
}

MultiScaleDiscriminator::MultiScaleDiscriminator(const DiscriminatorConfig& cfg, Rng& rng)
    : cfg_(cfg), d1_(cfg, rng), d2_(cfg, rng), d3_(cfg, rng) {
  cfg_.validate();
  register_module("d1", d1_);
  register_module("d2", d2_);
  register_module("d3", d3_);
}

Variable MultiScaleDiscriminator::make_stack(const Variable& candidate, const Variable& s1_t1, const Variable& s1_t2,
                                             const Variable& s2_t1) {
  const Shape& c = candidate.value().shape();
  for (auto [v, name] : {std::pair{&s1_t1, "s1_t1"}, std::pair{&s1_t2, "s1_t2"}, std::pair{&s2_t1, "s2_t1"}}) {
    const Shape& s = v->value().shape();
    if (s[0] != c[0] || s[2] != c[2] || s[3] != c[3]) {
      throw ShapeError(std::string("discriminator conditioning input ") + name + " " + shape_str(s) +
                       " is not aligned with the candidate " + shape_str(c));
    }
  }
  // Conditioning order is part of the contract.
  return O::concat({candidate, s1_t1, s1_t2, s2_t1}, 1);
}

Variable MultiScaleDiscriminator::downsample(const Variable& stack, int64_t divisor) {
  const Shape& s = stack.value().shape();
  return O::interp_bilinear(stack, s[2] / divisor, s[3] / divisor);
}

ScoreMaps MultiScaleDiscriminator::score_stack(const Variable& stack) {
  if (stack.value().shape()[1] != cfg_.in_channels) {
    throw ConfigError("discriminator: stack has " + std::to_string(stack.value().shape()[1]) +
                      " channels, config expects " + std::to_string(cfg_.in_channels));
  }
  ScoreMaps out;
  out.maps.push_back(d1_.forward(stack));
  out.maps.push_back(d2_.forward(downsample(stack, 2)));
  out.maps.push_back(d3_.forward(downsample(stack, 4)));
  return out;
}

ScoreMaps MultiScaleDiscriminator::forward(const Variable& candidate, const Variable& s1_t1, const Variable& s1_t2,
                                           const Variable& s2_t1) {
  return score_stack(make_stack(candidate, s1_t1, s1_t2, s2_t1));
}

namespace {
Variable leaky_relu(const Variable& x, double slope) {
  Variable pos = O::clamp_min(x, 0.0);
  return O::add(pos, O::mul_scalar(O::sub(x, pos), slope));
}
}  // namespace

AltDiscriminator::AltDiscriminator(const DiscriminatorConfig& cfg, Rng& rng) : in_channels_(cfg.in_channels) {
  int64_t in_ch = cfg.in_channels;
  for (size_t i = 0; i < cfg.widths.size(); ++i) {
    int64_t out_ch = cfg.widths[i];
    convs_.push_back(std::make_unique<nn::Conv2d>(in_ch, out_ch, 4, 2, 1, nn::PadMode::Zero, true, rng));
    register_module("conv" + std::to_string(i), *convs_.back());
    if (i > 0) {
      norms_.push_back(std::make_unique<nn::BatchNorm2d>(out_ch));
      register_module("bn" + std::to_string(i), *norms_.back());
    } else {
      norms_.push_back(nullptr);
    }
    in_ch = out_ch;
  }
  head_ = std::make_unique<nn::Conv2d>(in_ch, 1, 3, 1, 1, nn::PadMode::Zero, true, rng);
  register_module("head", *head_);
}

ScoreMaps AltDiscriminator::score_stack(const Variable& stack) {
  if (stack.value().shape()[1] != in_channels_) {
    throw ConfigError("alt discriminator: unexpected stack width");
  }
  Variable h = stack;
  for (size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i]->forward(h);
    if (norms_[i]) h = norms_[i]->forward(h);
    h = leaky_relu(h, 0.2);
  }
  ScoreMaps out;
  out.maps.push_back(head_->forward(h));
  return out;
}

}  // namespace crsynth::disc

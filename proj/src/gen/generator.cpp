#include "crsynth/gen/generator.hpp"

namespace crsynth::gen {

namespace O = ag::ops;

Decoder::Decoder(const GeneratorConfig& cfg, const AblationSpec& ablation, Rng& rng)
    : fuse3_(12 * cfg.swin_embed_dim, 4 * cfg.swin_embed_dim, rng),
      fuse2_(6 * cfg.swin_embed_dim, 2 * cfg.swin_embed_dim, rng),
      fuse1_(3 * cfg.swin_embed_dim, cfg.swin_embed_dim, rng),
      dropout_(cfg.dropout_rate),
      head_(cfg.swin_embed_dim, cfg.opt_channels, rng) {
  if (!ablation.no_channel_att) {
    ca4_ = std::make_unique<nn::ChannelAttention>(8 * cfg.swin_embed_dim, 8, rng);
    ca3_ = std::make_unique<nn::ChannelAttention>(4 * cfg.swin_embed_dim, 8, rng);
    register_module("ca4", *ca4_);
    register_module("ca3", *ca3_);
  }
  if (!ablation.no_spatial_att) {
    sa2_ = std::make_unique<nn::SpatialAttention>(rng);
    sa1_ = std::make_unique<nn::SpatialAttention>(rng);
    register_module("sa2", *sa2_);
    register_module("sa1", *sa1_);
  }
  register_module("fuse3", fuse3_);
  register_module("fuse2", fuse2_);
  register_module("fuse1", fuse1_);
  register_module("dropout", dropout_);
  register_module("head", head_);
}

Variable Decoder::forward(const std::array<Variable, 4>& features, Rng& rng) const {
  const auto& [f1, f2, f3, f4] = features;
  auto check_half = [](const Variable& fine, const Variable& coarse, const char* who) {
    const Shape& a = fine.value().shape();
    const Shape& b = coarse.value().shape();
    if (a[2] != 2 * b[2] || a[3] != 2 * b[3]) {
      throw ShapeError(std::string("Decoder: resolution chain broken at ") + who + ": " + shape_str(a) + " vs " +
                       shape_str(b));
    }
  };
  check_half(f1, f2, "f1/f2");
  check_half(f2, f3, "f2/f3");
  check_half(f3, f4, "f3/f4");

  Variable c4 = ca4_ ? ca4_->forward(f4) : f4;
  Variable c3 = ca3_ ? ca3_->forward(f3) : f3;
  Variable c2 = sa2_ ? sa2_->forward(f2) : f2;
  Variable c1 = sa1_ ? sa1_->forward(f1) : f1;

  Variable h = fuse3_.forward(O::concat({O::upsample_nearest(c4, 2), c3}, 1));
  h = dropout_.forward(h, rng);
  h = fuse2_.forward(O::concat({O::upsample_nearest(h, 2), c2}, 1));
  h = dropout_.forward(h, rng);
  h = fuse1_.forward(O::concat({O::upsample_nearest(h, 2), c1}, 1));
  return head_.forward(h);
}

Generator::Generator(const GeneratorConfig& cfg, const AblationSpec& ablation, Rng& rng)
    : cfg_(cfg),
      ablation_(ablation),
      stem_a_(cfg.opt_channels + cfg.sar_channels, cfg.base_width, rng),
      conv_a_(cfg.base_width, cfg.base_width, rng),
      stem_b_(cfg.sar_channels, cfg.base_width, rng),
      conv_b_(cfg.base_width, cfg.base_width, rng),
      backbone_(2 * cfg.base_width, cfg, rng),
      decoder_(cfg, ablation, rng) {
  cfg_.validate();
  register_module("stem_a", stem_a_);
  register_module("conv_a", conv_a_);
  if (ablation.no_downup) {
    downup_bypass_ = std::make_unique<MiniConvMish>(cfg.base_width, cfg.base_width, rng);
    register_module("downup_bypass", *downup_bypass_);
  } else {
    downup_ = std::make_unique<DownUpBlock>(cfg.base_width, cfg.base_width, rng);
    register_module("downup", *downup_);
  }
  register_module("stem_b", stem_b_);
  register_module("conv_b", conv_b_);
  if (!ablation.no_fusionatt) {
    fusion_ = std::make_unique<FusionAttention>(cfg.base_width, cfg.qk(), cfg.gamma_init, rng);
    register_module("fusion", *fusion_);
  }
  register_module("backbone", backbone_);
  register_module("decoder", decoder_);
}

Variable Generator::forward(const Variable& s1_t1, const Variable& s1_t2, const Variable& s2_t1, Rng& rng,
                            ShapeTrace* trace) const {
  auto check_input = [&](const Variable& v, int64_t channels, const char* name) {
    const Shape& s = v.value().shape();
    if (s.size() != 4) throw ConfigError(std::string("generator input ") + name + " must be NCHW");
    if (s[1] != channels) {
      throw ConfigError(std::string("generator input ") + name + " has " + std::to_string(s[1]) +
                        " channels, expected " + std::to_string(channels));
    }
  };
  check_input(s1_t1, cfg_.sar_channels, "s1_t1");
  check_input(s1_t2, cfg_.sar_channels, "s1_t2");
  check_input(s2_t1, cfg_.opt_channels, "s2_t1");
  const Shape& s = s1_t1.value().shape();
  for (auto [v, name] : {std::pair{&s1_t2, "s1_t2"}, std::pair{&s2_t1, "s2_t1"}}) {
    const Shape& o = v->value().shape();
    if (o[0] != s[0] || o[2] != s[2] || o[3] != s[3]) {
      throw ConfigError(std::string("generator input ") + name + " extent " + shape_str(o) +
                        " does not match s1_t1 " + shape_str(s));
    }
  }
  cfg_.validate_tile(s[2], s[3]);

  auto record = [&](const char* name, const Variable& v) {
    if (trace != nullptr) trace->add(name, v.value().shape());
  };

  // Branch A: time-1 modality fusion.
  Variable a = stem_a_.forward(O::concat({s2_t1, s1_t1}, 1));
  record("stem_a", a);
  a = conv_a_.forward(a);
  record("conv_a", a);
  a = downup_ ? downup_->forward(a) : downup_bypass_->forward(a);
  record("downup", a);

  // Branch B: time-2 SAR.
  Variable b = conv_b_.forward(stem_b_.forward(s1_t2));
  record("conv_b", b);

  Variable ya = a, yb = b;
  if (fusion_) {
    auto [f1, f2] = fusion_->forward(a, b);
    ya = f1;
    yb = f2;
  }
  record("fusion_a", ya);
  record("fusion_b", yb);

  auto features = backbone_.forward(O::concat({ya, yb}, 1));
  record("backbone_f1", features[0]);
  record("backbone_f2", features[1]);
  record("backbone_f3", features[2]);
  record("backbone_f4", features[3]);

  Variable out = decoder_.forward(features, rng);
  record("decoder", out);
  return out;
}

}  // namespace crsynth::gen

#pragma once

#include <optional>

#include "crsynth/config.hpp"
#include "crsynth/gen/blocks.hpp"
#include "crsynth/gen/fusion_attention.hpp"
#include "crsynth/gen/swin.hpp"

namespace crsynth::gen {

// Multi-scale attention decoder: channel attention on the two coarsest
// feature maps, spatial attention on the two finest, nearest-neighbor
// upsample + concat fusion per level, dropout after the two deepest fusions,
// ExtendedConvBlock head into the signed output range.
class Decoder : public nn::Module {
 public:
  Decoder(const GeneratorConfig& cfg, const AblationSpec& ablation, Rng& rng);
  Variable forward(const std::array<Variable, 4>& features, Rng& rng) const;

 private:
  std::unique_ptr<nn::ChannelAttention> ca3_, ca4_;
  std::unique_ptr<nn::SpatialAttention> sa1_, sa2_;
  MiniConvMish fuse3_, fuse2_, fuse1_;
  nn::Dropout dropout_;
  ExtendedConvBlock head_;
};

struct ShapeTrace {
  std::vector<std::pair<std::string, Shape>> entries;
  void add(const std::string& name, const Shape& s) { entries.emplace_back(name, s); }
};

// The full synthesis network. Branch A fuses the time-1 modalities
// (S2_T1 ++ S1_T1) through conv blocks and the DownUp block; branch B lifts
// S1_T2 through conv blocks; FusionAttention joins the two temporal branches;
// the concatenated result feeds the windowed-attention backbone and decoder.
class Generator : public nn::Module {
 public:
  Generator(const GeneratorConfig& cfg, Rng& rng) : Generator(cfg, AblationSpec{}, rng) {}
  Generator(const GeneratorConfig& cfg, const AblationSpec& ablation, Rng& rng);

  Variable forward(const Variable& s1_t1, const Variable& s1_t2, const Variable& s2_t1, Rng& rng,
                   ShapeTrace* trace = nullptr) const;

  const GeneratorConfig& config() const { return cfg_; }

 private:
  GeneratorConfig cfg_;
  AblationSpec ablation_;
  MiniConvMish stem_a_;
  ConvMishBlock conv_a_;
  std::unique_ptr<DownUpBlock> downup_;
  std::unique_ptr<MiniConvMish> downup_bypass_;
  MiniConvMish stem_b_;
  ConvMishBlock conv_b_;
  std::unique_ptr<FusionAttention> fusion_;
  SwinBackbone backbone_;
  Decoder decoder_;
};

}  // namespace crsynth::gen

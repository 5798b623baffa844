#pragma once

#include <memory>
#include <string>
#include <vector>

#include "crsynth/autograd/ops.hpp"
#include "crsynth/core/rng.hpp"

namespace crsynth::loss {

// Frozen feature network exposing named layers. Parameters never train.
class PerceptualExtractor {
 public:
  virtual ~PerceptualExtractor() = default;
  virtual std::vector<std::string> layer_names() const = 0;
  virtual std::vector<ag::Variable> features(const ag::Variable& x, const std::vector<std::string>& layers) const = 0;
  virtual std::string provenance() const = 0;
  // True when the extractor expects unit-range input.
  virtual bool wants_unit_range() const { return true; }
};

// Single pass-through layer named "identity"; handy as an oracle.
class IdentityExtractor : public PerceptualExtractor {
 public:
  std::vector<std::string> layer_names() const override { return {"identity"}; }
  std::vector<ag::Variable> features(const ag::Variable& x, const std::vector<std::string>& layers) const override;
  std::string provenance() const override { return "identity"; }
  bool wants_unit_range() const override { return false; }
};

// Three conv-Mish stages with average pooling in between, weights drawn once
// from a pinned seed and frozen. Random features keep the perceptual loss a
// valid distance while staying fully offline and deterministic.
class FixedRandomExtractor : public PerceptualExtractor {
 public:
  FixedRandomExtractor(uint64_t seed, int64_t in_channels, std::vector<int64_t> widths = {16, 32, 64});
  std::vector<std::string> layer_names() const override;
  std::vector<ag::Variable> features(const ag::Variable& x, const std::vector<std::string>& layers) const override;
  std::string provenance() const override { return "fixed-random"; }

 private:
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

// Mean over layers of the spatially normalized squared feature difference.
ag::Variable perceptual_loss(const ag::Variable& gen, const ag::Variable& ref, const PerceptualExtractor& extractor,
                             const std::vector<std::string>& layers);

}  // namespace crsynth::loss

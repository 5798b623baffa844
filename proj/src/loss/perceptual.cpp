#include "crsynth/loss/perceptual.hpp"

#include <algorithm>
#include <cmath>

namespace crsynth::loss {

namespace O = ag::ops;
using ag::Variable;

std::vector<Variable> IdentityExtractor::features(const Variable& x, const std::vector<std::string>& layers) const {
  std::vector<Variable> out;
  for (const auto& l : layers) {
    if (l != "identity") throw ConfigError("IdentityExtractor: unknown layer '" + l + "'");
    out.push_back(x);
  }
  return out;
}

FixedRandomExtractor::FixedRandomExtractor(uint64_t seed, int64_t in_channels, std::vector<int64_t> widths) {
  Rng rng(seed);
  int64_t in_ch = in_channels;
  for (int64_t w : widths) {
    Tensor weight(Shape{w, in_ch, 3, 3});
    double std = std::sqrt(2.0 / static_cast<double>(in_ch * 9));
    for (int64_t i = 0; i < weight.numel(); ++i) weight[i] = std * rng.normal();
    weights_.push_back(std::move(weight));
    biases_.push_back(Tensor::zeros({w}));
    in_ch = w;
  }
}

std::vector<std::string> FixedRandomExtractor::layer_names() const {
  std::vector<std::string> names;
  for (size_t i = 0; i < weights_.size(); ++i) names.push_back("stage" + std::to_string(i + 1));
  return names;
}

std::vector<Variable> FixedRandomExtractor::features(const Variable& x,
                                                     const std::vector<std::string>& layers) const {
  auto names = layer_names();
  for (const auto& l : layers) {
    if (std::find(names.begin(), names.end(), l) == names.end()) {
      throw ConfigError("FixedRandomExtractor: unknown layer '" + l + "'");
    }
  }
  std::vector<Variable> cache;
  Variable h = x;
  for (size_t i = 0; i < weights_.size(); ++i) {
    h = O::conv2d(h, Variable::constant(weights_[i]), 1, 1);
    h = O::add(h, Variable::constant(biases_[i].reshaped({1, biases_[i].numel(), 1, 1})));
    h = O::mish(h);
    cache.push_back(h);
    const Shape& s = h.value().shape();
    if (i + 1 < weights_.size() && s[2] >= 2 && s[3] >= 2) h = O::avgpool2(h);
  }
  std::vector<Variable> out;
  for (const auto& l : layers) {
    size_t idx = static_cast<size_t>(std::stoi(l.substr(5)) - 1);
    out.push_back(cache[idx]);
  }
  return out;
}

Variable perceptual_loss(const Variable& gen, const Variable& ref, const PerceptualExtractor& extractor,
                         const std::vector<std::string>& layers) {
  if (!same_shape(gen.value().shape(), ref.value().shape())) throw ShapeError("perceptual_loss: shape mismatch");
  if (layers.empty()) throw ConfigError("perceptual_loss: no layers selected");
  auto fg = extractor.features(gen, layers);
  auto fr = extractor.features(ref, layers);
  Variable acc;
  for (size_t i = 0; i < layers.size(); ++i) {
    const Shape& s = fg[i].value().shape();
    int64_t n = s[0];
    double spatial = static_cast<double>(s[2] * s[3]);
    Variable diff = O::sub(fr[i], fg[i]);
    Variable per_sample = O::sum_axes(O::reshape(O::square(diff), {n, s[1] * s[2] * s[3]}), {1}, false);
    Variable layer_loss = O::mul_scalar(O::mean_all(per_sample), 1.0 / spatial);
    acc = acc.defined() ? O::add(acc, layer_loss) : layer_loss;
  }
  return O::mul_scalar(acc, 1.0 / static_cast<double>(layers.size()));
}

}  // namespace crsynth::loss

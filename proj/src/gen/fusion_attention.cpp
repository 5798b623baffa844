#include "crsynth/gen/fusion_attention.hpp"

namespace crsynth::gen {

namespace O = ag::ops;

FusionAttention::FusionAttention(int64_t channels, int64_t qk_channels, double gamma_init, Rng& rng)
    : q1_(channels, qk_channels, 1, 1, 0, nn::PadMode::Zero, true, rng),
      k1_(channels, qk_channels, 1, 1, 0, nn::PadMode::Zero, true, rng),
      v1_(channels, channels, 1, 1, 0, nn::PadMode::Zero, true, rng),
      q2_(channels, qk_channels, 1, 1, 0, nn::PadMode::Zero, true, rng),
      k2_(channels, qk_channels, 1, 1, 0, nn::PadMode::Zero, true, rng),
      v2_(channels, channels, 1, 1, 0, nn::PadMode::Zero, true, rng),
      gamma_(register_parameter("gamma", Tensor::full({1}, gamma_init))) {
  register_module("q1", q1_);
  register_module("k1", k1_);
  register_module("v1", v1_);
  register_module("q2", q2_);
  register_module("k2", k2_);
  register_module("v2", v2_);
}

void FusionAttention::tie_projections() {
  auto copy = [](const nn::Module& src, nn::Module& dst) {
    auto sp = src.named_parameters();
    auto dp = dst.named_parameters();
    for (size_t i = 0; i < sp.size(); ++i) dp[i].second.mutable_value() = sp[i].second.value();
  };
  copy(q1_, q2_);
  copy(k1_, k2_);
  copy(v1_, v2_);
}

std::pair<Variable, Variable> FusionAttention::forward(const Variable& in1, const Variable& in2) const {
  if (!same_shape(in1.value().shape(), in2.value().shape())) {
    throw ShapeError("FusionAttention: input shapes differ, " + shape_str(in1.value().shape()) + " vs " +
                     shape_str(in2.value().shape()));
  }
  const Shape& s = in1.value().shape();
  int64_t n = s[0], c = s[1], h = s[2], w = s[3];
  int64_t hw = h * w;

  // Concatenated, per-position L2-normalized queries and keys.
  Variable q = O::l2_normalize(O::concat({q1_.forward(in1), q2_.forward(in2)}, 1), 1);
  Variable k = O::l2_normalize(O::concat({k1_.forward(in1), k2_.forward(in2)}, 1), 1);
  int64_t qk2 = q.value().shape()[1];

  Variable q_rows = O::permute(O::reshape(q, {n, qk2, hw}), {0, 2, 1});  // (N, HW, 2qk)
  Variable k_flat = O::reshape(k, {n, qk2, hw});                         // (N, 2qk, HW)

  auto attend = [&](const nn::Conv2d& v_proj, const Variable& src) {
    Variable v_rows = O::permute(O::reshape(v_proj.forward(src), {n, c, hw}), {0, 2, 1});  // (N, HW, C)
    Variable context = O::bmm(k_flat, v_rows);                                             // (N, 2qk, C)
    Variable att = O::bmm(q_rows, context);                                                // (N, HW, C)
    att = O::mul_scalar(att, 1.0 / static_cast<double>(hw));
    return O::reshape(O::permute(att, {0, 2, 1}), {n, c, h, w});
  };

  Variable y1 = O::add(in1, O::mul(gamma_, attend(v1_, in1)));
  Variable y2 = O::add(in2, O::mul(gamma_, attend(v2_, in2)));
  return {y1, y2};
}

}  // namespace crsynth::gen

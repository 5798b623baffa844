#include "crsynth/loss/losses.hpp"

namespace crsynth::loss {

namespace O = ag::ops;

Variable cosine_loss(const Variable& gen, const Variable& ref, double eps) {
  const Shape& s = gen.value().shape();
  if (!same_shape(s, ref.value().shape())) throw ShapeError("cosine_loss: shape mismatch");
  int64_t n = s[0];
  int64_t inner = gen.numel() / n;
  Variable g = O::reshape(gen, {n, inner});
  Variable r = O::reshape(ref, {n, inner});
  Variable num = O::sum_axes(O::mul(g, r), {1}, false);
  Variable ng = O::sqrt(O::sum_axes(O::square(g), {1}, false));
  Variable nr = O::sqrt(O::sum_axes(O::square(r), {1}, false));
  Variable denom = O::clamp_min(O::mul(ng, nr), eps);
  Variable cos = O::div(num, denom);
  return O::mean_all(O::add_scalar(O::neg(cos), 1.0));
}

Variable ms_ssim_loss(const Variable& gen_unit, const Variable& ref_unit, std::string* note) {
  SsimOptions opt;
  MsSsimResult res = ms_ssim_value(gen_unit, ref_unit, opt);
  if (note != nullptr && res.reduced) {
    *note = "ms-ssim reduced to " + std::to_string(res.scales_used) + " scales with window " +
            std::to_string(res.window_used) + " to fit the input extent";
  }
  return O::add_scalar(O::neg(res.value), 1.0);
}

namespace {
Variable signed_to_unit(const Variable& x) { return O::add_scalar(O::mul_scalar(x, 0.5), 0.5); }
}  // namespace

Variable similarity_loss(const Variable& gen, const Variable& ref, const LossWeights& weights,
                         const PerceptualExtractor& extractor, const std::vector<std::string>& layers) {
  weights.validate();
  Variable total = Variable::constant(Tensor::scalar(0.0));
  if (weights.alpha > 0.0) {
    Variable g = extractor.wants_unit_range() ? signed_to_unit(gen) : gen;
    Variable r = extractor.wants_unit_range() ? signed_to_unit(ref) : ref;
    total = O::add(total, O::mul_scalar(perceptual_loss(g, r, extractor, layers), weights.alpha));
  }
  if (weights.beta > 0.0) {
    total = O::add(total, O::mul_scalar(cosine_loss(gen, ref), weights.beta));
  }
  if (weights.gamma_sim > 0.0) {
    total = O::add(total, O::mul_scalar(ms_ssim_loss(signed_to_unit(gen), signed_to_unit(ref)), weights.gamma_sim));
  }
  return total;
}

Variable generator_adv_loss(const disc::ScoreMaps& scores) {
  if (scores.maps.empty()) throw ShapeError("generator_adv_loss: no score maps");
  Variable acc;
  for (const auto& m : scores.maps) {
    Variable term = O::mul_scalar(O::mean_all(O::square(O::add_scalar(m, -1.0))), 0.5);
    acc = acc.defined() ? O::add(acc, term) : term;
  }
  return O::mul_scalar(acc, 1.0 / static_cast<double>(scores.maps.size()));
}

Variable generator_total_loss(const Variable& gen, const Variable& ref, const disc::ScoreMaps& scores,
                              const LossWeights& weights, const PerceptualExtractor& extractor,
                              const std::vector<std::string>& layers) {
  Variable sim = similarity_loss(gen, ref, weights, extractor, layers);
  if (weights.lambda_adv == 0.0) return sim;
  return O::add(sim, O::mul_scalar(generator_adv_loss(scores), weights.lambda_adv));
}

Variable gradient_penalty(const CriticFn& critic, const Tensor& real_stack, const Tensor& fake_stack, Rng& rng,
                          bool create_graph) {
  if (!same_shape(real_stack.shape(), fake_stack.shape())) throw ShapeError("gradient_penalty: stack shape mismatch");
  const Shape& s = real_stack.shape();
  int64_t n = s[0];
  int64_t inner = real_stack.numel() / n;

  // One epsilon per batch item, broadcast over all other axes.
  Tensor xhat_value(s);
  for (int64_t i = 0; i < n; ++i) {
    double eps = rng.uniform();
    const double* pr = real_stack.data() + i * inner;
    const double* pf = fake_stack.data() + i * inner;
    double* px = xhat_value.data() + i * inner;
    for (int64_t j = 0; j < inner; ++j) px[j] = eps * pr[j] + (1.0 - eps) * pf[j];
  }

  Variable xhat = Variable::leaf(std::move(xhat_value));
  Variable scores = critic(xhat);
  if (!scores.requires_grad()) {
    throw std::runtime_error("gradient_penalty: critic output does not depend differentiably on its input");
  }
  auto grads = ag::grad(O::sum_all(scores), {xhat}, create_graph);
  if (!grads[0].defined()) {
    throw std::runtime_error("gradient_penalty: no differentiable path from critic output to the interpolate");
  }
  Variable g = O::reshape(grads[0], {n, inner});
  Variable norm = O::sqrt(O::sum_axes(O::square(g), {1}, false));
  return O::mean_all(O::square(O::add_scalar(norm, -1.0)));
}

DiscriminatorLossParts discriminator_loss(disc::Critic& critic, const Variable& real_stack,
                                          const Variable& fake_stack, const LossWeights& weights, Rng& rng,
                                          bool create_graph) {
  weights.validate();
  DiscriminatorLossParts parts;
  parts.real_term = O::neg(critic.score_stack(real_stack).mean_of_scale_means());
  parts.fake_term = critic.score_stack(fake_stack).mean_of_scale_means();
  parts.total = O::add(parts.real_term, parts.fake_term);
  if (weights.lambda_gp > 0.0) {
    CriticFn fn = [&critic](const Variable& x) { return critic.score_stack(x).per_sample_score(); };
    parts.penalty = gradient_penalty(fn, real_stack.value(), fake_stack.value(), rng, create_graph);
    parts.total = O::add(parts.total, O::mul_scalar(parts.penalty, weights.lambda_gp));
  } else {
    parts.penalty = Variable::constant(Tensor::scalar(0.0));
  }
  return parts;
}

}  // namespace crsynth::loss

#pragma once

#include <functional>

#include "crsynth/config.hpp"
#include "crsynth/disc/discriminator.hpp"
#include "crsynth/loss/perceptual.hpp"
#include "crsynth/loss/ssim.hpp"

namespace crsynth::loss {

using ag::Variable;

// 1 - mean cosine similarity of the flattened per-sample contents; in [0,2].
// Zero-norm inputs are epsilon-guarded and never produce NaN.
Variable cosine_loss(const Variable& gen, const Variable& ref, double eps = 1e-8);

// 1 - MS-SSIM on unit-range inputs. Scale count (and, on tiny inputs, the
// window) shrink to fit; `note` reports the reduction when provided.
Variable ms_ssim_loss(const Variable& gen_unit, const Variable& ref_unit, std::string* note = nullptr);

// alpha * perceptual + beta * (1 - cos) + gamma_sim * (1 - MS-SSIM) on
// signed-range inputs (the generator's output domain).
Variable similarity_loss(const Variable& gen, const Variable& ref, const LossWeights& weights,
                         const PerceptualExtractor& extractor, const std::vector<std::string>& layers);

// Least-squares generator term: mean over scales of mean((scores - 1)^2) / 2.
Variable generator_adv_loss(const disc::ScoreMaps& scores);

Variable generator_total_loss(const Variable& gen, const Variable& ref, const disc::ScoreMaps& scores,
                              const LossWeights& weights, const PerceptualExtractor& extractor,
                              const std::vector<std::string>& layers);

// Critic callable for the penalty: maps a stack to per-sample scores (N).
using CriticFn = std::function<Variable(const Variable&)>;

// WGAN-GP penalty: interpolates real/fake per batch item with a uniform
// epsilon, differentiates the critic at the interpolate, and penalizes the
// squared distance of the input-gradient L2 norm from 1. With create_graph
// the penalty itself remains differentiable w.r.t. the critic parameters.
Variable gradient_penalty(const CriticFn& critic, const Tensor& real_stack, const Tensor& fake_stack, Rng& rng,
                          bool create_graph = false);

struct DiscriminatorLossParts {
  Variable total;
  Variable real_term;   // -E[D(real)]
  Variable fake_term;   // +E[D(fake)]
  Variable penalty;     // gradient penalty before weighting
};

// loss_D = -E[D(real)] + E[D(fake)] + lambda_gp * GP. Stacks carry identical
// conditioning channels; the fake stack must already be detached.
DiscriminatorLossParts discriminator_loss(disc::Critic& critic, const Variable& real_stack,
                                          const Variable& fake_stack, const LossWeights& weights, Rng& rng,
                                          bool create_graph = true);

}  // namespace crsynth::loss

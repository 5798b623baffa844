#include "crsynth/train/optim.hpp"

#include <cmath>

namespace crsynth::train {

Adam::Adam(std::vector<std::pair<std::string, ag::Variable>> params, double lr, double beta1, double beta2,
           double weight_decay, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), weight_decay_(weight_decay), eps_(eps) {
  for (auto& [name, p] : params) {
    slots_.push_back({name, p, Tensor::zeros(p.shape()), Tensor::zeros(p.shape())});
  }
}

void Adam::zero_grad() {
  for (auto& s : slots_) s.param.zero_grad();
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& s : slots_) {
    if (!s.param.has_grad()) continue;
    const Tensor& g = s.param.grad();
    Tensor& theta = s.param.mutable_value();
    for (int64_t i = 0; i < theta.numel(); ++i) {
      double grad = g[i] + weight_decay_ * theta[i];
      s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * grad;
      s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * grad * grad;
      double mhat = s.m[i] / bc1;
      double vhat = s.v[i] / bc2;
      theta[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

std::vector<std::pair<std::string, Tensor*>> Adam::state_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (auto& s : slots_) {
    out.emplace_back("m." + s.name, &s.m);
    out.emplace_back("v." + s.name, &s.v);
  }
  return out;
}

PlateauScheduler::PlateauScheduler(double factor, int64_t patience) : factor_(factor), patience_(patience) {
  if (factor <= 0.0 || factor >= 1.0) throw ConfigError("PlateauScheduler: factor must be in (0,1)");
  if (patience < 1) throw ConfigError("PlateauScheduler: patience must be >= 1");
}

bool PlateauScheduler::observe(double metric, Adam& optimizer) {
  if (!has_best_ || metric > best_) {
    best_ = metric;
    has_best_ = true;
    bad_epochs_ = 0;
    return false;
  }
  ++bad_epochs_;
  if (bad_epochs_ >= patience_) {
    optimizer.set_lr(optimizer.lr() * factor_);
    bad_epochs_ = 0;
    return true;
  }
  return false;
}

void PlateauScheduler::restore(double best, bool has_best, int64_t bad_epochs) {
  best_ = best;
  has_best_ = has_best;
  bad_epochs_ = bad_epochs;
}

}  // namespace crsynth::train

#pragma once

#include <string>
#include <vector>

#include "crsynth/autograd/variable.hpp"

namespace crsynth::train {

// Adam with the usual bias correction and optional L2-style weight decay
// folded into the gradient. Parameters with no gradient are skipped.
class Adam {
 public:
  Adam(std::vector<std::pair<std::string, ag::Variable>> params, double lr, double beta1, double beta2,
       double weight_decay = 0.0, double eps = 1e-8);

  void zero_grad();
  void step();

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  double weight_decay() const { return weight_decay_; }
  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }

  // Moment tensors by name (m.<param>, v.<param>) for checkpointing.
  std::vector<std::pair<std::string, Tensor*>> state_tensors();

 private:
  struct Slot {
    std::string name;
    ag::Variable param;
    Tensor m, v;
  };
  std::vector<Slot> slots_;
  double lr_, beta1_, beta2_, weight_decay_, eps_;
  int64_t t_ = 0;
};

// Reduce-on-plateau for a higher-is-better metric: after `patience`
// consecutive non-improving observations the learning rate is scaled by
// `factor` and the streak resets.
class PlateauScheduler {
 public:
  PlateauScheduler(double factor, int64_t patience);

  // Returns true when the learning rate was reduced this observation.
  bool observe(double metric, Adam& optimizer);

  double best() const { return best_; }
  int64_t bad_epochs() const { return bad_epochs_; }
  bool has_best() const { return has_best_; }
  void restore(double best, bool has_best, int64_t bad_epochs);

 private:
  double factor_;
  int64_t patience_;
  double best_ = 0.0;
  bool has_best_ = false;
  int64_t bad_epochs_ = 0;
};

}  // namespace crsynth::train

#pragma once

#include <map>
#include <string>
#include <vector>

#include "crsynth/core/tensor.hpp"

namespace crsynth::train {

// Single-file checkpoint: a human-readable JSON manifest (name, shape, dtype,
// byte offset per tensor, plus scalar run state) followed by one binary blob
// of little-endian float64 data.
struct Checkpoint {
  int64_t epoch = 0;
  std::string config_hash;
  double scheduler_best = 0.0;
  bool scheduler_has_best = false;
  int64_t scheduler_bad_epochs = 0;
  double g_lr = 0.0;
  double d_lr = 0.0;
  int64_t opt_g_steps = 0;
  int64_t opt_d_steps = 0;
  std::vector<uint64_t> train_rng_state;  // 4 words
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace crsynth::train

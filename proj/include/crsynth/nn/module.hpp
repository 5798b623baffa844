#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "crsynth/autograd/variable.hpp"

namespace crsynth::nn {

// Base class with an insertion-ordered parameter/buffer/child registry.
// Ordering is deterministic, which the optimizer, checkpoints, and the
// reproducibility tests all rely on.
class Module {
 public:
  virtual ~Module() = default;
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;

  std::vector<std::pair<std::string, ag::Variable>> named_parameters() const;
  std::vector<ag::Variable> parameters() const;
  std::vector<std::pair<std::string, Tensor*>> named_buffers();
  int64_t parameter_count() const;

  void set_training(bool on);
  bool is_training() const { return training_; }

  // Parameters followed by buffers, both by dotted name.
  std::vector<std::pair<std::string, Tensor>> state_dict() const;
  void load_state_dict(const std::vector<std::pair<std::string, Tensor>>& state);

 protected:
  ag::Variable& register_parameter(const std::string& name, Tensor init);
  Tensor& register_buffer(const std::string& name, Tensor init);
  void register_module(const std::string& name, Module& child);

 private:
  void collect_params(const std::string& prefix, std::vector<std::pair<std::string, ag::Variable>>& out) const;
  void collect_buffers(const std::string& prefix, std::vector<std::pair<std::string, Tensor*>>& out);

  bool training_ = true;
  std::vector<std::pair<std::string, std::unique_ptr<ag::Variable>>> params_;
  std::vector<std::pair<std::string, std::unique_ptr<Tensor>>> buffers_;
  std::vector<std::pair<std::string, Module*>> children_;
};

}  // namespace crsynth::nn

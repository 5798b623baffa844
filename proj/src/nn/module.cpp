#include "crsynth/nn/module.hpp"

#include <stdexcept>
#include <unordered_map>

namespace crsynth::nn {

ag::Variable& Module::register_parameter(const std::string& name, Tensor init) {
  params_.emplace_back(name, std::make_unique<ag::Variable>(ag::Variable::leaf(std::move(init))));
  return *params_.back().second;
}

Tensor& Module::register_buffer(const std::string& name, Tensor init) {
  buffers_.emplace_back(name, std::make_unique<Tensor>(std::move(init)));
  return *buffers_.back().second;
}

void Module::register_module(const std::string& name, Module& child) { children_.emplace_back(name, &child); }

void Module::collect_params(const std::string& prefix, std::vector<std::pair<std::string, ag::Variable>>& out) const {
  for (const auto& [name, p] : params_) out.emplace_back(prefix + name, *p);
  for (const auto& [name, child] : children_) child->collect_params(prefix + name + ".", out);
}

void Module::collect_buffers(const std::string& prefix, std::vector<std::pair<std::string, Tensor*>>& out) {
  for (auto& [name, b] : buffers_) out.emplace_back(prefix + name, b.get());
  for (auto& [name, child] : children_) child->collect_buffers(prefix + name + ".", out);
}

std::vector<std::pair<std::string, ag::Variable>> Module::named_parameters() const {
  std::vector<std::pair<std::string, ag::Variable>> out;
  collect_params("", out);
  return out;
}

std::vector<ag::Variable> Module::parameters() const {
  std::vector<ag::Variable> out;
  for (auto& [name, p] : named_parameters()) out.push_back(p);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> Module::named_buffers() {
  std::vector<std::pair<std::string, Tensor*>> out;
  collect_buffers("", out);
  return out;
}

int64_t Module::parameter_count() const {
  int64_t n = 0;
  for (const auto& [name, p] : named_parameters()) n += p.numel();
  return n;
}

void Module::set_training(bool on) {
  training_ = on;
  for (auto& [name, child] : children_) child->set_training(on);
}

std::vector<std::pair<std::string, Tensor>> Module::state_dict() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& [name, p] : named_parameters()) out.emplace_back(name, p.value());
  for (auto& [name, b] : const_cast<Module*>(this)->named_buffers()) out.emplace_back(name, *b);
  return out;
}

void Module::load_state_dict(const std::vector<std::pair<std::string, Tensor>>& state) {
  std::unordered_map<std::string, const Tensor*> lookup;
  for (const auto& [name, t] : state) lookup.emplace(name, &t);

  size_t used = 0;
  for (auto& [name, p] : named_parameters()) {
    auto it = lookup.find(name);
    if (it == lookup.end()) throw ConfigError("state dict missing parameter " + name);
    if (!same_shape(it->second->shape(), p.shape())) {
      throw ConfigError("state dict shape mismatch for " + name + ": file has " + shape_str(it->second->shape()) +
                        ", model expects " + shape_str(p.shape()));
    }
    p.mutable_value() = *it->second;
    ++used;
  }
  for (auto& [name, b] : named_buffers()) {
    auto it = lookup.find(name);
    if (it == lookup.end()) throw ConfigError("state dict missing buffer " + name);
    if (!same_shape(it->second->shape(), b->shape())) {
      throw ConfigError("state dict shape mismatch for buffer " + name);
    }
    *b = *it->second;
    ++used;
  }
  if (used != state.size()) throw ConfigError("state dict has unused entries");
}

}  // namespace crsynth::nn

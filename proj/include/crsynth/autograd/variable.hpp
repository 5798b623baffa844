#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "crsynth/core/tensor.hpp"

namespace crsynth::ag {

class Node;

// Handle to a value in the autodiff graph. Copies are cheap (shared node).
class Variable {
 public:
  Variable() = default;
  explicit Variable(std::shared_ptr<Node> n) : node(std::move(n)) {}

  static Variable constant(Tensor v);
  static Variable leaf(Tensor v);  // requires_grad = true

  bool defined() const { return node != nullptr; }
  const Tensor& value() const;
  Tensor& mutable_value();  // in-place parameter updates (optimizer only)
  const Shape& shape() const { return value().shape(); }
  int64_t numel() const { return value().numel(); }
  bool requires_grad() const;

  // Constant copy of the current value, cut off from the graph.
  Variable detach() const;

  // Leaf gradient storage, filled by backward().
  bool has_grad() const;
  const Tensor& grad() const;
  void zero_grad();
  void accumulate_grad(const Tensor& g);

  std::shared_ptr<Node> node;
};

bool grad_enabled();

struct NoGradGuard {
  bool prev;
  NoGradGuard();
  ~NoGradGuard();
};

struct GradModeGuard {
  bool prev;
  explicit GradModeGuard(bool on);
  ~GradModeGuard();
};

// Backward functions are written in terms of graph ops so that gradients are
// themselves differentiable (needed for the gradient penalty).
using BackwardFn = std::function<std::vector<Variable>(const Variable& gy, const std::vector<Variable>& inputs,
                                                       const Variable& output)>;

class Node {
 public:
  Tensor value;
  bool requires_grad = false;
  std::vector<Variable> inputs;
  BackwardFn backward;
  const char* op = "leaf";
  std::unique_ptr<Tensor> grad;  // populated on leaves by ag::backward
};

// Creates a graph node. When gradients are disabled or no input needs them,
// the inputs and backward function are dropped so inference builds no graph.
Variable make_node(const char* op, Tensor value, std::vector<Variable> inputs, BackwardFn bw);

// Gradients of `output` w.r.t. `wrt`. Entries are undefined Variables when no
// differentiable path exists. With create_graph the returned gradients carry
// their own graph and can be differentiated again.
std::vector<Variable> grad(const Variable& output, const std::vector<Variable>& wrt, bool create_graph = false,
                           const Variable& grad_output = Variable());

// Accumulates gradients of a scalar output into the .grad slot of every
// reachable leaf with requires_grad.
void backward(const Variable& output);

}  // namespace crsynth::ag

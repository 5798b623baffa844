#include "crsynth/autograd/variable.hpp"

#include <unordered_map>
#include <unordered_set>

#include "crsynth/autograd/ops.hpp"

namespace crsynth::ag {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev; }

GradModeGuard::GradModeGuard(bool on) : prev(g_grad_enabled) { g_grad_enabled = on; }
GradModeGuard::~GradModeGuard() { g_grad_enabled = prev; }

Variable Variable::constant(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = false;
  n->op = "const";
  return Variable(std::move(n));
}

Variable Variable::leaf(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  n->op = "leaf";
  return Variable(std::move(n));
}

const Tensor& Variable::value() const {
  if (!node) throw std::runtime_error("use of undefined Variable");
  return node->value;
}

Tensor& Variable::mutable_value() {
  if (!node) throw std::runtime_error("use of undefined Variable");
  return node->value;
}

bool Variable::requires_grad() const { return node && node->requires_grad; }

Variable Variable::detach() const { return Variable::constant(value()); }

bool Variable::has_grad() const { return node && node->grad != nullptr; }

const Tensor& Variable::grad() const {
  if (!has_grad()) throw std::runtime_error("Variable has no gradient");
  return *node->grad;
}

void Variable::zero_grad() {
  if (node) node->grad.reset();
}

void Variable::accumulate_grad(const Tensor& g) {
  if (!node) throw std::runtime_error("use of undefined Variable");
  if (!node->grad) {
    node->grad = std::make_unique<Tensor>(g);
  } else {
    if (!same_shape(node->grad->shape(), g.shape())) throw ShapeError("gradient shape mismatch");
    double* dst = node->grad->data();
    const double* src = g.data();
    for (int64_t i = 0; i < g.numel(); ++i) dst[i] += src[i];
  }
}

Variable make_node(const char* op, Tensor value, std::vector<Variable> inputs, BackwardFn bw) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = op;
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) {
      if (in.requires_grad()) {
        needs = true;
        break;
      }
    }
  }
  if (needs) {
    n->requires_grad = true;
    n->inputs = std::move(inputs);
    n->backward = std::move(bw);
  }
  return Variable(std::move(n));
}

namespace {

// Post-order over the subgraph that requires grad, rooted at `root`.
std::vector<std::shared_ptr<Node>> topo_order(const std::shared_ptr<Node>& root) {
  std::vector<std::shared_ptr<Node>> order;
  if (!root || !root->requires_grad) return order;
  std::unordered_set<Node*> seen;
  // Explicit stack: (node, next input index).
  std::vector<std::pair<std::shared_ptr<Node>, size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->inputs.size()) {
      auto child = node->inputs[idx].node;
      ++idx;
      if (child && child->requires_grad && !seen.count(child.get())) {
        seen.insert(child.get());
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

std::vector<Variable> grad(const Variable& output, const std::vector<Variable>& wrt, bool create_graph,
                           const Variable& grad_output) {
  if (!output.defined()) throw std::runtime_error("grad: undefined output");
  auto order = topo_order(output.node);

  std::unordered_map<Node*, Variable> gmap;
  GradModeGuard mode(create_graph);

  Variable seed = grad_output;
  if (!seed.defined()) seed = Variable::constant(Tensor::ones(output.shape()));
  gmap[output.node.get()] = seed;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = it->get();
    auto git = gmap.find(n);
    if (git == gmap.end()) continue;  // no path from output
    if (!n->backward) continue;       // leaf
    Variable gy = git->second;
    std::vector<Variable> gs = n->backward(gy, n->inputs, Variable(*it));
    if (gs.size() != n->inputs.size()) throw std::runtime_error(std::string("backward arity mismatch in op ") + n->op);
    for (size_t i = 0; i < gs.size(); ++i) {
      const Variable& in = n->inputs[i];
      if (!in.requires_grad() || !gs[i].defined()) continue;
      auto [slot, fresh] = gmap.try_emplace(in.node.get(), gs[i]);
      if (!fresh) slot->second = ops::add(slot->second, gs[i]);
    }
  }

  std::vector<Variable> result;
  result.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto f = gmap.find(w.node.get());
    result.push_back(f == gmap.end() ? Variable() : f->second);
  }
  return result;
}

void backward(const Variable& output) {
  auto order = topo_order(output.node);
  std::vector<Variable> leaves;
  for (const auto& n : order) {
    if (!n->backward && n->requires_grad) leaves.emplace_back(n);
  }
  auto gs = grad(output, leaves, /*create_graph=*/false);
  for (size_t i = 0; i < leaves.size(); ++i) {
    if (gs[i].defined()) leaves[i].accumulate_grad(gs[i].value());
  }
}

}  // namespace crsynth::ag

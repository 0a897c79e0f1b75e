#include "layoutgen/numerics/tensor.hpp"

#include <functional>
#include <iterator>
#include <optional>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "layoutgen/numerics/ops.hpp"

namespace layoutgen::num {

namespace {
thread_local Tape* t_active_tape = nullptr;
thread_local bool t_grad_enabled = true;
}  // namespace

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw DimensionError("negative dimension in shape " + to_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, float fill) : impl_(std::make_shared<TensorImpl>()) {
  impl_->data.assign(element_count(shape), fill);
  impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : impl_(std::make_shared<TensorImpl>()) {
  if (element_count(shape) != data.size()) {
    throw DimensionError("shape " + to_string(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
}

int Tensor::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) throw DimensionError("axis out of range for " + to_string(shape()));
  return impl_->shape[axis];
}

float Tensor::item() const {
  if (numel() != 1) throw ContractError("item() on tensor of shape " + to_string(shape()));
  return impl_->data[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  return *this;
}

Tensor Tensor::clone() const { return Tensor(impl_->shape, impl_->data); }

Tape::~Tape() { clear(); }

Tensor Tape::record(std::string_view op, std::vector<Tensor> inputs, Tensor output, BackwardFn fn) {
  output.impl()->requires_grad = true;
  output.impl()->tape = this;
  output.impl()->node = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{op, std::move(inputs), output, std::move(fn)});
  return output;
}

void Tape::clear() {
  for (auto& n : nodes_) {
    // Detach outputs so tensors that outlive the tape become plain leaves.
    if (n.output.defined() && n.output.impl()->tape == this) {
      n.output.impl()->tape = nullptr;
      n.output.impl()->node = -1;
      n.output.impl()->requires_grad = false;
    }
  }
  nodes_.clear();
}

TapeScope::TapeScope(Tape& tape) : previous_(t_active_tape), previous_enabled_(t_grad_enabled) {
  t_active_tape = &tape;
  t_grad_enabled = true;
}

TapeScope::~TapeScope() {
  t_active_tape = previous_;
  t_grad_enabled = previous_enabled_;
}

NoGradScope::NoGradScope() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradScope::~NoGradScope() { t_grad_enabled = previous_; }

Tape* active_tape() { return t_active_tape; }
bool recording() { return t_grad_enabled && t_active_tape != nullptr; }

Tensor track(std::string_view op, std::vector<Tensor> inputs, Tensor output, Tape::BackwardFn fn) {
  if (!recording()) return output;
  bool any = false;
  for (const auto& in : inputs) {
    if (!in.requires_grad()) continue;
    if (in.impl()->tape != nullptr && in.impl()->tape != t_active_tape) {
      throw ContractError(std::string(op) + ": input recorded on a different tape");
    }
    any = true;
  }
  if (!any) return output;
  return t_active_tape->record(op, std::move(inputs), std::move(output), std::move(fn));
}

Tensor Gradients::of(const Tensor& t) const {
  auto it = grads_.find(t.impl());
  if (it == grads_.end()) return Tensor(t.shape(), 0.0f);
  return it->second;
}

Gradients backward(const Tensor& loss, Tape& tape, std::span<const Tensor> wrt, bool create_graph) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward requires a scalar loss, got " +
                        (loss.defined() ? to_string(loss.shape()) : std::string("undefined")));
  }
  if (loss.impl()->tape != nullptr && loss.impl()->tape != &tape) {
    throw ContractError("backward: loss was recorded on a different tape");
  }

  std::unordered_set<const TensorImpl*> targets;
  for (const auto& t : wrt) targets.insert(t.impl());
  const bool all_leaves = targets.empty();

  const std::size_t n_nodes = tape.size();
  std::vector<char> leads(n_nodes, 0);
  auto relevant = [&](const Tensor& t) {
    if (!t.requires_grad()) return false;
    const TensorImpl* p = t.impl();
    if (p->tape == &tape && p->node >= 0 && static_cast<std::size_t>(p->node) < n_nodes) {
      return targets.contains(p) || leads[p->node] != 0;
    }
    return all_leaves || targets.contains(p);
  };
  for (std::size_t i = 0; i < n_nodes; ++i) {
    for (const auto& in : tape.nodes()[i].inputs) {
      if (relevant(in)) {
        leads[i] = 1;
        break;
      }
    }
  }

  Gradients result;
  auto& grads = result.grads_;
  grads.emplace(loss.impl(), Tensor(loss.shape(), 1.0f));

  std::optional<TapeScope> scope;
  std::optional<NoGradScope> no_grad;
  if (create_graph) {
    scope.emplace(tape);
  } else {
    no_grad.emplace();
  }

  const int loss_node = loss.impl()->tape == &tape ? loss.impl()->node : -1;
  for (int i = loss_node; i >= 0; --i) {
    if (!leads[i]) continue;
    // Copy: recording in create_graph mode may reallocate the node list.
    const Tape::Node node = tape.nodes()[i];
    auto git = grads.find(node.output.impl());
    if (git == grads.end()) continue;
    const Tensor grad_out = git->second;
    if (!targets.contains(node.output.impl())) grads.erase(git);

    std::vector<bool> needs(node.inputs.size());
    bool any = false;
    for (std::size_t j = 0; j < node.inputs.size(); ++j) {
      needs[j] = relevant(node.inputs[j]);
      any = any || needs[j];
    }
    if (!any) continue;
    std::vector<Tensor> in_grads = node.backward(node, grad_out, needs);
    for (std::size_t j = 0; j < node.inputs.size(); ++j) {
      if (!needs[j] || !in_grads[j].defined()) continue;
      const TensorImpl* key = node.inputs[j].impl();
      auto [it, inserted] = grads.try_emplace(key, in_grads[j]);
      if (!inserted) it->second = add(it->second, in_grads[j]);
    }
  }

  if (!all_leaves) {
    for (auto it = grads.begin(); it != grads.end();) {
      it = targets.contains(it->first) ? std::next(it) : grads.erase(it);
    }
  } else {
    for (auto it = grads.begin(); it != grads.end();) {
      const TensorImpl* p = it->first;
      const bool leaf = !(p->tape == &tape && p->node >= 0);
      it = leaf && p->requires_grad ? std::next(it) : grads.erase(it);
    }
  }
  return result;
}

}  // namespace layoutgen::num

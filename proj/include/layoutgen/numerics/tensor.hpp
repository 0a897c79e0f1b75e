#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace layoutgen::num {

using Shape = std::vector<int>;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

class Tape;

struct TensorImpl {
  Shape shape;
  std::vector<float> data;
  bool requires_grad = false;
  // Producing node inside `tape`, or -1 for leaves and untracked values.
  Tape* tape = nullptr;
  int node = -1;
};

/// Shared handle to a row-major float32 array that may participate in a tape.
/// Copies alias the same storage; use `clone()` for an independent copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor scalar(float value) { return Tensor({1}, {value}); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  /// Dimension size; negative indices count from the back.
  int dim(int axis) const;
  std::size_t numel() const { return impl_->data.size(); }

  std::span<float> data() { return impl_->data; }
  std::span<const float> data() const { return impl_->data; }
  float operator[](std::size_t i) const { return impl_->data[i]; }
  float item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on);

  /// Independent copy of the values with no history.
  Tensor clone() const;

  bool is(const Tensor& other) const { return impl_ == other.impl_; }
  const TensorImpl* impl() const { return impl_.get(); }
  TensorImpl* impl() { return impl_.get(); }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

/// Ordered record of differentiable operations. Nodes are appended in
/// execution order, so the list is always topologically sorted.
class Tape {
 public:
  struct Node;
  using BackwardFn = std::function<std::vector<Tensor>(
      const Node& node, const Tensor& grad_out, const std::vector<bool>& needs)>;

  struct Node {
    std::string_view op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  /// Appends a node producing `output`; returns the output marked as tracked.
  Tensor record(std::string_view op, std::vector<Tensor> inputs, Tensor output, BackwardFn fn);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  std::vector<Node> nodes_;
};

/// Makes `tape` the active recording target for this thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
  bool previous_enabled_;
};

/// Suspends recording on this thread.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  bool previous_;
};

Tape* active_tape();
bool recording();

/// Records `output` on the active tape when any input requires grad;
/// otherwise returns it untracked. Every differentiable op goes through here.
Tensor track(std::string_view op, std::vector<Tensor> inputs, Tensor output, Tape::BackwardFn fn);

class Gradients {
 public:
  /// Gradient for `t`; an all-zero tensor of matching shape when `t` had none.
  Tensor of(const Tensor& t) const;
  bool contains(const Tensor& t) const { return grads_.contains(t.impl()); }

 private:
  friend Gradients backward(const Tensor&, Tape&, std::span<const Tensor>, bool);
  std::unordered_map<const TensorImpl*, Tensor> grads_;
};

/// Reverse-mode pass from a scalar `loss`. When `wrt` is empty, gradients are
/// produced for every requires-grad leaf reachable from the loss; otherwise
/// only for the listed tensors, and the pass is pruned to paths reaching them.
/// With `create_graph`, the backward computation is itself appended to `tape`
/// so the returned gradients can be differentiated again.
Gradients backward(const Tensor& loss, Tape& tape, std::span<const Tensor> wrt = {},
                   bool create_graph = false);

}  // namespace layoutgen::num

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bandbridge/autograd/shape.hpp"

namespace bandbridge::ag {

template <typename T>
struct Node;

// Accumulates gradients of the current backward pass into `node`'s scratch
// buffer; returns an empty span when the node does not require grad.
template <typename T>
std::span<T> pass_grad(Node<T>& node);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;       // persistent, leaves only
  std::vector<T> pass;       // scratch for one backward traversal
  bool requires_grad = false;
  std::string op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads self.pass, adds into pass_grad(*input) for each input.
  std::function<void(Node&)> backward_fn;

  bool is_leaf() const noexcept { return !backward_fn; }
};

// Reverse-mode tape reconstructed from a scalar loss: every recorded op
// reachable through requires_grad edges, inputs before consumers.
template <typename T>
class Tape {
 public:
  explicit Tape(Node<T>& root);

  std::size_t size() const noexcept { return order_.size(); }
  const std::vector<Node<T>*>& order() const noexcept { return order_; }
  bool is_topological() const;

 private:
  std::vector<Node<T>*> order_;
};

// Dense row-major array with optional gradient tape participation.
//
// Copies share storage; data is immutable after creation except through
// mutable_data(), which only parameter owners (optimizer, finite-difference
// checks) should use on leaves.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->data.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape[axis]; }

  std::span<const T> data() const { return node_->data; }
  std::span<T> mutable_data() { return node_->data; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag);
  bool is_leaf() const { return node_->is_leaf(); }
  const std::string& op() const { return node_->op; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad; }
  void zero_grad();

  // Accumulates d(this)/d(leaf) into every reachable leaf that requires grad.
  void backward() const;

  // New leaf holding a copy of the values, outside any tape.
  Tensor detach() const;

  Node<T>& node() const { return *node_; }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

  static Tensor from_node(std::shared_ptr<Node<T>> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

// Gradient recording switch, per thread.
bool grad_enabled() noexcept;

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds an op result. Inputs and the backward rule are retained only
// when recording is on and some input requires grad.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, std::vector<Tensor<T>> inputs,
                      std::string op, std::function<void(Node<T>&)> backward_fn);

}  // namespace bandbridge::ag

#include "bandbridge/autograd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "bandbridge/core/error.hpp"

namespace bandbridge::ag {

Shape::Shape(std::initializer_list<std::size_t> dims) : dims_(dims) { validate(); }

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) { validate(); }

void Shape::validate() const {
  if (dims_.size() > kMaxRank) {
    throw ShapeError("rank " + std::to_string(dims_.size()) + " exceeds maximum " +
                     std::to_string(kMaxRank));
  }
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i] == 0) throw ShapeError("zero extent on axis " + std::to_string(i) + " of " + str());
  }
}

std::size_t Shape::numel() const noexcept {
  std::size_t n = 1;
  for (auto d : dims_) n *= d;
  return n;
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims_.size(); ++i) os << (i ? "," : "") << dims_[i];
  os << ']';
  return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;

template <typename T>
void check_finite([[maybe_unused]] const std::vector<T>& data, [[maybe_unused]] const std::string& op) {
#ifndef NDEBUG
  for (const T v : data) {
    if (!std::isfinite(v)) throw DataError("non-finite value produced by " + op);
  }
#endif
}
}  // namespace

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
std::span<T> pass_grad(Node<T>& node) {
  if (!node.requires_grad) return {};
  if (node.pass.empty()) node.pass.assign(node.data.size(), T(0));
  return node.pass;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad) {
  if (shape.numel() != data.size()) {
    throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " + shape.str());
  }
  node_ = std::make_shared<Node<T>>();
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = shape.numel();
  return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{}, std::vector<T>{value}, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape().str());
  return node_->data[0];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool flag) {
  if (!is_leaf()) throw Error("requires_grad can only be changed on leaf tensors");
  node_->requires_grad = flag;
}

template <typename T>
void Tensor<T>::zero_grad() {
  node_->grad.clear();
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(node_->shape, node_->data, false);
}

template <typename T>
Tape<T>::Tape(Node<T>& root) {
  // Iterative post-order DFS over requires_grad edges.
  std::unordered_set<const Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(&root, 0);
  visited.insert(&root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order_.push_back(node);
      stack.pop_back();
    }
  }
}

template <typename T>
bool Tape<T>::is_topological() const {
  std::unordered_map<const Node<T>*, std::size_t> position;
  for (std::size_t i = 0; i < order_.size(); ++i) {
    if (!position.emplace(order_[i], i).second) return false;
  }
  for (std::size_t i = 0; i < order_.size(); ++i) {
    for (const auto& input : order_[i]->inputs) {
      if (!input->requires_grad) continue;
      auto it = position.find(input.get());
      if (it == position.end() || it->second >= i) return false;
    }
  }
  return true;
}

template <typename T>
void Tensor<T>::backward() const {
  if (!defined() || numel() != 1) {
    throw ShapeError("backward() requires a scalar loss, got " + (defined() ? shape().str() : "undefined"));
  }
  if (!node_->requires_grad || node_->is_leaf()) {
    throw Error("backward() on a loss with an empty tape");
  }

  Tape<T> tape(*node_);
  node_->pass.assign(1, T(1));
  const auto& order = tape.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>& node = **it;
    if (node.pass.empty()) continue;
    if (node.is_leaf()) {
      if (node.grad.empty()) {
        node.grad = std::move(node.pass);
      } else {
        for (std::size_t i = 0; i < node.grad.size(); ++i) node.grad[i] += node.pass[i];
      }
    } else {
      node.backward_fn(node);
    }
    std::vector<T>().swap(node.pass);
  }
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, std::vector<Tensor<T>> inputs, std::string op,
                      std::function<void(Node<T>&)> backward_fn) {
  check_finite(data, op);
  Tensor<T> out(std::move(shape), std::move(data), false);
  if (!g_grad_enabled) return out;
  const bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>& t) { return t.requires_grad(); });
  if (!any) return out;
  auto& node = out.node();
  node.requires_grad = true;
  node.op = std::move(op);
  node.backward_fn = std::move(backward_fn);
  node.inputs.reserve(inputs.size());
  for (auto& t : inputs) node.inputs.push_back(t.node_ptr());
  return out;
}

template std::span<float> pass_grad(Node<float>&);
template std::span<double> pass_grad(Node<double>&);
template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;
template Tensor<float> make_result(Shape, std::vector<float>, std::vector<Tensor<float>>, std::string,
                                   std::function<void(Node<float>&)>);
template Tensor<double> make_result(Shape, std::vector<double>, std::vector<Tensor<double>>, std::string,
                                    std::function<void(Node<double>&)>);

}  // namespace bandbridge::ag

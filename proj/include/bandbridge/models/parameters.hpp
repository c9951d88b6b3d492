#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bandbridge/autograd/tensor.hpp"

namespace bandbridge::models {

template <typename T>
struct Parameter {
  std::string name;
  ag::Tensor<T> value;
  std::string init;  // "kaiming_uniform", "zeros" or "ones"
};

// Ordered, uniquely named trainable tensors.
template <typename T>
class ParameterSet {
 public:
  void add(std::string name, ag::Tensor<T> value, std::string init);

  const ag::Tensor<T>& at(std::string_view name) const;
  ag::Tensor<T>& at(std::string_view name);
  bool contains(std::string_view name) const { return index_.contains(std::string(name)); }

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<Parameter<T>>& entries() const noexcept { return entries_; }
  std::vector<Parameter<T>>& entries() noexcept { return entries_; }

  std::size_t scalar_count() const;
  std::vector<ag::Tensor<T>> tensors() const;
  void zero_grad();

  // Deep copy converted to another scalar type; requires_grad preserved.
  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& p : entries_) {
      std::vector<U> data(p.value.data().begin(), p.value.data().end());
      out.add(p.name, ag::Tensor<U>(p.value.shape(), std::move(data), p.value.requires_grad()), p.init);
    }
    return out;
  }

 private:
  std::vector<Parameter<T>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace bandbridge::models

#include "bandbridge/models/parameters.hpp"

#include <utility>

#include "bandbridge/core/error.hpp"

namespace bandbridge::models {

template <typename T>
void ParameterSet<T>::add(std::string name, ag::Tensor<T> value, std::string init) {
  if (index_.contains(name)) throw SpecError("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(value), std::move(init)});
}

template <typename T>
const ag::Tensor<T>& ParameterSet<T>::at(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw SpecError("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].value;
}

template <typename T>
ag::Tensor<T>& ParameterSet<T>::at(std::string_view name) {
  return const_cast<ag::Tensor<T>&>(std::as_const(*this).at(name));
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.value.numel();
  return n;
}

template <typename T>
std::vector<ag::Tensor<T>> ParameterSet<T>::tensors() const {
  std::vector<ag::Tensor<T>> out;
  out.reserve(entries_.size());
  for (const auto& p : entries_) out.push_back(p.value);
  return out;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& p : entries_) p.value.zero_grad();
}

template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace bandbridge::models

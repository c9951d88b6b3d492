#include "bandbridge/autograd/adam.hpp"

#include <cmath>

#include "bandbridge/core/error.hpp"

namespace bandbridge::ag {

template <typename T>
AdamState<T> AdamState<T>::fresh(const Tensor<T>& param, const AdamConfig& config) {
  AdamState state;
  state.m.assign(param.numel(), T(0));
  state.v.assign(param.numel(), T(0));
  state.config = config;
  return state;
}

template <typename T>
void adam_step(std::span<Tensor<T>> params, std::span<AdamState<T>> states) {
  if (params.size() != states.size()) throw Error("adam_step: parameter/state count mismatch");
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!params[p].has_grad()) throw Error("adam_step: parameter " + std::to_string(p) + " has no gradient");
    if (states[p].m.size() != params[p].numel()) throw ShapeError("adam_step: state shape mismatch");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    AdamState<T>& s = states[p];
    const AdamConfig& c = s.config;
    ++s.t;
    const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.t));
    const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.t));
    auto values = params[p].mutable_data();
    const auto grad = params[p].grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      const double m = c.beta1 * static_cast<double>(s.m[i]) + (1.0 - c.beta1) * g;
      const double v = c.beta2 * static_cast<double>(s.v[i]) + (1.0 - c.beta2) * g * g;
      s.m[i] = static_cast<T>(m);
      s.v[i] = static_cast<T>(v);
      const double m_hat = m / correction1;
      const double v_hat = v / correction2;
      values[i] = static_cast<T>(static_cast<double>(values[i]) - c.lr * m_hat / (std::sqrt(v_hat) + c.eps));
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(std::span<Tensor<float>>, std::span<AdamState<float>>);
template void adam_step(std::span<Tensor<double>>, std::span<AdamState<double>>);

}  // namespace bandbridge::ag

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bandbridge/autograd/tensor.hpp"

namespace bandbridge::ag {

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::int64_t t = 0;
  AdamConfig config;

  static AdamState fresh(const Tensor<T>& param, const AdamConfig& config);
};

// One bias-corrected Adam update per parameter; increments every state's t.
// Throws if a parameter has no gradient buffer or the lists differ in length.
template <typename T>
void adam_step(std::span<Tensor<T>> params, std::span<AdamState<T>> states);

}  // namespace bandbridge::ag

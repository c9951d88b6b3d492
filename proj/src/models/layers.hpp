#pragma once

#include <cmath>
#include <string>

#include "bandbridge/autograd/ops.hpp"
#include "bandbridge/core/random.hpp"
#include "bandbridge/models/parameters.hpp"
#include "bandbridge/models/spec.hpp"

namespace bandbridge::models::detail {

// Appends "<prefix>.weight" / "<prefix>.bias" for a k x k convolution.
template <typename T>
void add_conv(ParameterSet<T>& params, const Rng& root, const std::string& prefix, std::size_t cin, std::size_t cout,
              std::size_t k, bool zero_init = false) {
  const std::size_t n = cout * cin * k * k;
  std::vector<T> w(n, T(0));
  if (!zero_init) {
    Rng rng = root.split(params.size());
    const double bound = std::sqrt(6.0 / static_cast<double>(cin * k * k));
    for (auto& v : w) v = static_cast<T>(rng.uniform(-bound, bound));
  }
  params.add(prefix + ".weight", ag::Tensor<T>(ag::Shape{cout, cin, k, k}, std::move(w), true),
             zero_init ? "zeros" : "kaiming_uniform");
  params.add(prefix + ".bias", ag::Tensor<T>::zeros(ag::Shape{cout}, true), "zeros");
}

template <typename T>
void add_norm(ParameterSet<T>& params, const std::string& prefix, std::size_t channels) {
  params.add(prefix + ".gamma", ag::Tensor<T>::full(ag::Shape{channels}, T(1), true), "ones");
  params.add(prefix + ".beta", ag::Tensor<T>::zeros(ag::Shape{channels}, true), "zeros");
}

template <typename T>
ag::Tensor<T> conv(const ParameterSet<T>& params, const std::string& prefix, const ag::Tensor<T>& x,
                   ag::PaddingMode mode) {
  const auto& w = params.at(prefix + ".weight");
  return ag::conv2d(x, w, params.at(prefix + ".bias"), ag::Conv2dOptions{1, w.dim(2) / 2, mode});
}

template <typename T>
ag::Tensor<T> norm(const ParameterSet<T>& params, const std::string& prefix, const ag::Tensor<T>& x) {
  return ag::layer_norm(x, params.at(prefix + ".gamma"), params.at(prefix + ".beta"));
}

// Global residual: input bands 0..out-1 plus the head's correction.
template <typename T>
ag::Tensor<T> add_input_bands(const ag::Tensor<T>& input, const ag::Tensor<T>& residual) {
  return ag::add(ag::slice(input, 1, 0, residual.dim(1)), residual);
}


template <typename T>
void build_unet(const ModelSpec& spec, ParameterSet<T>& params);

template <typename T>
void build_esrt(const ModelSpec& spec, ParameterSet<T>& params);

}  // namespace bandbridge::models::detail

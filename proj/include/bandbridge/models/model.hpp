#pragma once

#include <vector>

#include "bandbridge/autograd/tensor.hpp"
#include "bandbridge/models/parameters.hpp"
#include "bandbridge/models/spec.hpp"

namespace bandbridge::models {

// Deterministic initialisation from spec.seed: Kaiming-uniform (fan-in,
// ReLU gain) conv weights, zero biases, unit/zero norm affine, and an
// all-zero output head so the untrained residual is exactly 0.
template <typename T>
ParameterSet<T> build(const ModelSpec& spec);

// Encoder-decoder with skip concatenation; returns input bands 0..5 plus
// the predicted residual.
template <typename T>
ag::Tensor<T> unet_forward(const ModelSpec& spec, const ParameterSet<T>& params, const ag::Tensor<T>& input);

// Collects the per-window attention probabilities of every transformer block.
template <typename T>
struct AttentionProbe {
  std::vector<ag::Tensor<T>> weights;  // [windows * heads, tokens, tokens]
};

// Conv embedding, conv residual backbone, windowed efficient attention
// blocks and a conv head, all at input resolution (no upsampler).
template <typename T>
ag::Tensor<T> esrt_forward(const ModelSpec& spec, const ParameterSet<T>& params, const ag::Tensor<T>& input,
                           AttentionProbe<T>* probe = nullptr);

// Input channels 0..5 unchanged.
template <typename T>
ag::Tensor<T> bicubic_passthrough(const ag::Tensor<T>& input);

// Dispatch on spec.kind.
template <typename T>
ag::Tensor<T> forward(const ModelSpec& spec, const ParameterSet<T>& params, const ag::Tensor<T>& input);

}  // namespace bandbridge::models

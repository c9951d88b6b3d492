#pragma once

#include <cstddef>
#include <vector>

#include "bandbridge/autograd/tensor.hpp"

namespace bandbridge::ag {

enum class PaddingMode { Zero, Circular };

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
  PaddingMode mode = PaddingMode::Zero;
};

// Elementwise, identical shapes.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

// Scalar ops.
template <typename T> Tensor<T> scale(const Tensor<T>& x, T factor);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& x, T offset);

template <typename T> Tensor<T> relu(const Tensor<T>& x);
// Exact (erf) GELU.
template <typename T> Tensor<T> gelu(const Tensor<T>& x);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);

template <typename T> Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);
// Half-open range [begin, end) along `axis`.
template <typename T> Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end);
template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T> Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& order);
template <typename T> Tensor<T> transpose(const Tensor<T>& x, std::size_t axis_a, std::size_t axis_b);

// 2x2 window, stride 2, on N x C x H x W with even H and W.
template <typename T> Tensor<T> max_pool2d(const Tensor<T>& x);
template <typename T> Tensor<T> upsample_nearest2x(const Tensor<T>& x);

// [M,K] x [K,N] or batched [B,M,K] x [B,K,N].
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);

// Normalizes N x C x H x W over C at every (n, h, w), then applies the
// per-channel affine gamma * x + beta.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps = T(1e-6));

// Cross-correlation. weight is [Cout, Cin, k, k] with odd k; bias is [Cout].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 const Conv2dOptions& options = {});

template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);

// Mean absolute difference. Subgradient at zero difference is 0.
template <typename T> Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target);

// [N, C, H, W] -> [N * windows * heads, window^2, C / heads]; windows are
// row-major over the (H / window) x (W / window) grid, head h owns channels
// [h * C / heads, (h + 1) * C / heads).
template <typename T> Tensor<T> window_partition(const Tensor<T>& x, std::size_t window, std::size_t heads);
// Inverse of window_partition for the given target image shape.
template <typename T>
Tensor<T> window_merge(const Tensor<T>& tokens, const Shape& image_shape, std::size_t window, std::size_t heads);

}  // namespace bandbridge::ag

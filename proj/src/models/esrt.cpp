#include <cmath>
#include <string>

#include "bandbridge/core/error.hpp"
#include "bandbridge/models/model.hpp"
#include "layers.hpp"

namespace bandbridge::models {

namespace detail {

template <typename T>
void build_esrt(const ModelSpec& spec, ParameterSet<T>& params) {
  const Rng root(spec.seed);
  const auto& e = spec.esrt;
  const std::size_t embed = e.embed_channels, reduced = embed / e.split_factor;
  add_conv(params, root, "embed", spec.in_channels, embed, 3);
  for (std::size_t i = 0; i < e.backbone_blocks; ++i) {
    const std::string p = "backbone" + std::to_string(i);
    add_conv(params, root, p + ".conv1", embed, embed, 3);
    add_conv(params, root, p + ".conv2", embed, embed, 3);
  }
  for (std::size_t j = 0; j < e.transformer_blocks; ++j) {
    const std::string p = "transformer" + std::to_string(j);
    add_norm(params, p + ".ln1", embed);
    add_conv(params, root, p + ".qkv", embed, 3 * reduced, 1);
    add_conv(params, root, p + ".proj", reduced, embed, 1);
    add_norm(params, p + ".ln2", embed);
    add_conv(params, root, p + ".mlp1", embed, 2 * embed, 1);
    add_conv(params, root, p + ".mlp2", 2 * embed, embed, 1);
  }
  add_conv(params, root, "fuse", embed, embed, 3);
  add_conv(params, root, "head", embed, spec.out_channels, 3, /*zero_init=*/true);
}

template void build_esrt(const ModelSpec&, ParameterSet<float>&);
template void build_esrt(const ModelSpec&, ParameterSet<double>&);

// Multi-head self-attention inside non-overlapping windows, on the
// reduced channel set produced by the block's qkv projection.
template <typename T>
ag::Tensor<T> window_attention(const ModelSpec& spec, const ParameterSet<T>& params, const std::string& prefix,
                               const ag::Tensor<T>& x, AttentionProbe<T>* probe) {
  const auto& e = spec.esrt;
  const std::size_t reduced = e.embed_channels / e.split_factor;
  const std::size_t head_dim = reduced / e.heads;
  const auto qkv = conv(params, prefix + ".qkv", x, spec.padding);
  const ag::Shape image{x.dim(0), reduced, x.dim(2), x.dim(3)};
  const auto q = ag::window_partition(ag::slice(qkv, 1, 0, reduced), e.window, e.heads);
  const auto k = ag::window_partition(ag::slice(qkv, 1, reduced, 2 * reduced), e.window, e.heads);
  const auto v = ag::window_partition(ag::slice(qkv, 1, 2 * reduced, 3 * reduced), e.window, e.heads);
  const T temperature = T(1) / std::sqrt(static_cast<T>(head_dim));
  const auto scores = ag::scale(ag::matmul(q, ag::transpose(k, 1, 2)), temperature);
  const auto attn = ag::softmax(scores, 2);
  if (probe != nullptr) probe->weights.push_back(attn);
  const auto mixed = ag::window_merge(ag::matmul(attn, v), image, e.window, e.heads);
  return conv(params, prefix + ".proj", mixed, spec.padding);
}

}  // namespace detail

template <typename T>
ag::Tensor<T> esrt_forward(const ModelSpec& spec, const ParameterSet<T>& params, const ag::Tensor<T>& input,
                           AttentionProbe<T>* probe) {
  using detail::conv;
  using detail::norm;
  if (input.shape().rank() != 4 || input.dim(1) != spec.in_channels) {
    throw ShapeError("esrt_forward: expected [N,7,H,W] input, got " + input.shape().str());
  }
  const std::size_t window = spec.esrt.window;
  if (input.dim(2) % window || input.dim(3) % window) {
    throw ShapeError("esrt_forward: H and W of " + input.shape().str() + " must be divisible by the attention window " +
                     std::to_string(window));
  }
  const auto mode = spec.padding;
  const auto shallow = conv(params, "embed", input, mode);
  ag::Tensor<T> x = shallow;
  for (std::size_t i = 0; i < spec.esrt.backbone_blocks; ++i) {
    const std::string p = "backbone" + std::to_string(i);
    x = ag::add(x, conv(params, p + ".conv2", ag::relu(conv(params, p + ".conv1", x, mode)), mode));
  }
  for (std::size_t j = 0; j < spec.esrt.transformer_blocks; ++j) {
    const std::string p = "transformer" + std::to_string(j);
    x = ag::add(x, detail::window_attention(spec, params, p, norm(params, p + ".ln1", x), probe));
    const auto hidden = ag::gelu(conv(params, p + ".mlp1", norm(params, p + ".ln2", x), mode));
    x = ag::add(x, conv(params, p + ".mlp2", hidden, mode));
  }
  x = ag::add(conv(params, "fuse", x, mode), shallow);
  return detail::add_input_bands(input, conv(params, "head", x, mode));
}

template ag::Tensor<float> esrt_forward(const ModelSpec&, const ParameterSet<float>&, const ag::Tensor<float>&,
                                        AttentionProbe<float>*);
template ag::Tensor<double> esrt_forward(const ModelSpec&, const ParameterSet<double>&, const ag::Tensor<double>&,
                                         AttentionProbe<double>*);

}  // namespace bandbridge::models

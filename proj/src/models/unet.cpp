#include <string>
#include <vector>

#include "bandbridge/core/error.hpp"
#include "bandbridge/models/model.hpp"
#include "layers.hpp"

namespace bandbridge::models {

namespace detail {

template <typename T>
void build_unet(const ModelSpec& spec, ParameterSet<T>& params) {
  const Rng root(spec.seed);
  const std::size_t depth = spec.unet.depth, base = spec.unet.base_channels;
  std::size_t cin = spec.in_channels;
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t c = base << l;
    const std::string p = "enc" + std::to_string(l);
    add_conv(params, root, p + ".conv1", cin, c, 3);
    add_conv(params, root, p + ".conv2", c, c, 3);
    cin = c;
  }
  const std::size_t bottom = base << depth;
  add_conv(params, root, "bottleneck.conv1", cin, bottom, 3);
  add_conv(params, root, "bottleneck.conv2", bottom, bottom, 3);
  for (std::size_t l = depth; l-- > 0;) {
    const std::size_t c = base << l;
    const std::string p = "dec" + std::to_string(l);
    add_conv(params, root, p + ".up", c * 2, c, 1);
    add_conv(params, root, p + ".conv1", c * 2, c, 3);
    add_conv(params, root, p + ".conv2", c, c, 3);
  }
  add_conv(params, root, "head", base, spec.out_channels, 1, /*zero_init=*/true);
}

template void build_unet(const ModelSpec&, ParameterSet<float>&);
template void build_unet(const ModelSpec&, ParameterSet<double>&);

}  // namespace detail

template <typename T>
ag::Tensor<T> unet_forward(const ModelSpec& spec, const ParameterSet<T>& params, const ag::Tensor<T>& input) {
  using detail::conv;
  const std::size_t m = spec.spatial_multiple();
  if (input.shape().rank() != 4 || input.dim(1) != spec.in_channels) {
    throw ShapeError("unet_forward: expected [N,7,H,W] input, got " + input.shape().str());
  }
  if (input.dim(2) % m || input.dim(3) % m) {
    throw ShapeError("unet_forward: H and W of " + input.shape().str() + " must be divisible by " + std::to_string(m));
  }
  const auto mode = spec.padding;
  std::vector<ag::Tensor<T>> skips;
  ag::Tensor<T> x = input;
  for (std::size_t l = 0; l < spec.unet.depth; ++l) {
    const std::string p = "enc" + std::to_string(l);
    x = ag::relu(conv(params, p + ".conv1", x, mode));
    x = ag::relu(conv(params, p + ".conv2", x, mode));
    skips.push_back(x);
    x = ag::max_pool2d(x);
  }
  x = ag::relu(conv(params, "bottleneck.conv1", x, mode));
  x = ag::relu(conv(params, "bottleneck.conv2", x, mode));
  for (std::size_t l = spec.unet.depth; l-- > 0;) {
    const std::string p = "dec" + std::to_string(l);
    x = conv(params, p + ".up", ag::upsample_nearest2x(x), mode);
    x = ag::concat<T>({skips[l], x}, 1);
    x = ag::relu(conv(params, p + ".conv1", x, mode));
    x = ag::relu(conv(params, p + ".conv2", x, mode));
  }
  return detail::add_input_bands(input, conv(params, "head", x, mode));
}

template ag::Tensor<float> unet_forward(const ModelSpec&, const ParameterSet<float>&, const ag::Tensor<float>&);
template ag::Tensor<double> unet_forward(const ModelSpec&, const ParameterSet<double>&, const ag::Tensor<double>&);

}  // namespace bandbridge::models

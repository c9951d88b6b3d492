#include "bandbridge/models/model.hpp"

#include "bandbridge/core/error.hpp"
#include "layers.hpp"

namespace bandbridge::models {

template <typename T>
ParameterSet<T> build(const ModelSpec& spec) {
  spec.validate();
  ParameterSet<T> params;
  switch (spec.kind) {
    case ModelKind::Unet: detail::build_unet(spec, params); break;
    case ModelKind::EsrtLite: detail::build_esrt(spec, params); break;
    case ModelKind::BicubicPassthrough: break;
  }
  return params;
}

template <typename T>
ag::Tensor<T> bicubic_passthrough(const ag::Tensor<T>& input) {
  if (input.shape().rank() != 4 || input.dim(1) < 6) {
    throw ShapeError("bicubic_passthrough: expected [N,>=6,H,W] input, got " + input.shape().str());
  }
  return ag::slice(input, 1, 0, 6);
}

template <typename T>
ag::Tensor<T> forward(const ModelSpec& spec, const ParameterSet<T>& params, const ag::Tensor<T>& input) {
  switch (spec.kind) {
    case ModelKind::Unet: return unet_forward(spec, params, input);
    case ModelKind::EsrtLite: return esrt_forward(spec, params, input);
    case ModelKind::BicubicPassthrough: return bicubic_passthrough(input);
  }
  throw SpecError("unknown model kind");
}

template ParameterSet<float> build(const ModelSpec&);
template ParameterSet<double> build(const ModelSpec&);
template ag::Tensor<float> bicubic_passthrough(const ag::Tensor<float>&);
template ag::Tensor<double> bicubic_passthrough(const ag::Tensor<double>&);
template ag::Tensor<float> forward(const ModelSpec&, const ParameterSet<float>&, const ag::Tensor<float>&);
template ag::Tensor<double> forward(const ModelSpec&, const ParameterSet<double>&, const ag::Tensor<double>&);

}  // namespace bandbridge::models

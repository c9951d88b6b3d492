#include "bandbridge/harness/evaluate.hpp"

#include <algorithm>

#include "bandbridge/core/error.hpp"
#include "bandbridge/core/parallel.hpp"
#include "bandbridge/metrics/metrics.hpp"
#include "bandbridge/models/model.hpp"

namespace bandbridge::harness {

Method Method::bicubic() { return Method{}; }

Method Method::from_checkpoint(const std::filesystem::path& path, std::string name) {
  if (!std::filesystem::exists(path)) throw DataError("checkpoint not found: " + path.string());
  auto checkpoint = models::load_checkpoint(path);
  if (name.empty()) name = std::string(models::kind_name(checkpoint.spec.kind));
  return Method{std::move(name), std::move(checkpoint)};
}

Method Method::from_params(std::string name, models::ModelSpec spec, models::ParameterSet<float> params) {
  return Method{std::move(name), models::Checkpoint{std::move(spec), std::move(params), 0}};
}

raster::RasterPatch predict(const Method& method, const raster::RasterPatch& input) {
  if (input.channels() != raster::kInputBands.size()) {
    throw ShapeError("predict: expected a 7-band input, got " + std::to_string(input.channels()));
  }
  std::vector<float> values;
  if (method.checkpoint) {
    const ag::NoGradGuard guard;
    const auto out = models::forward(method.checkpoint->spec, method.checkpoint->params, to_tensor(input));
    values.assign(out.data().begin(), out.data().end());
  } else {
    const auto bicubic = input.select(raster::kTargetBands);
    values.assign(bicubic.pixels().begin(), bicubic.pixels().end());
  }
  for (auto& v : values) v = std::clamp(v, 0.0f, raster::kReflectanceCeiling);
  return raster::RasterPatch(std::vector<raster::Band>(raster::kTargetBands.begin(), raster::kTargetBands.end()),
                             input.height(), input.width(), input.gsd_m(), input.origin(), std::move(values));
}

metrics::MetricReport evaluate(const Method& method, const SplitData& data) {
  if (data.size() == 0) throw DataError("evaluate: empty split");
  std::vector<metrics::PatchRecord> records(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const auto prediction = predict(method, data.inputs[i]);
    records[i] = {data.ids[i], metrics::ssim(prediction, data.targets[i]), metrics::nrmse(prediction, data.targets[i])};
  });
  return metrics::aggregate(method.name, std::move(records));
}

metrics::MetricReport evaluate(const Method& method, const std::filesystem::path& root, synthpipe::Split split) {
  return evaluate(method, load_split(root, split));
}

}  // namespace bandbridge::harness

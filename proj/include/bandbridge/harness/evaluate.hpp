#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "bandbridge/harness/data.hpp"
#include "bandbridge/metrics/report.hpp"
#include "bandbridge/models/checkpoint.hpp"

namespace bandbridge::harness {

// Bicubic passthrough or a trained model.
struct Method {
  std::string name = "bicubic";
  std::optional<models::Checkpoint> checkpoint;

  static Method bicubic();
  static Method from_checkpoint(const std::filesystem::path& path, std::string name = {});
  static Method from_params(std::string name, models::ModelSpec spec, models::ParameterSet<float> params);
};

// Prediction for one 7-band input, clamped to [0, 1.5].
raster::RasterPatch predict(const Method& method, const raster::RasterPatch& input);

// Per-patch SSIM and NRMSE over the split, evaluated in parallel.
metrics::MetricReport evaluate(const Method& method, const SplitData& data);
metrics::MetricReport evaluate(const Method& method, const std::filesystem::path& root, synthpipe::Split split);

}  // namespace bandbridge::harness

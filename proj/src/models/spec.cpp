#include "bandbridge/models/spec.hpp"

#include <string>

#include "bandbridge/core/error.hpp"

namespace bandbridge::models {

using nlohmann::json;

std::string_view kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Unet: return "unet";
    case ModelKind::EsrtLite: return "esrt_lite";
    case ModelKind::BicubicPassthrough: return "bicubic_passthrough";
  }
  return "?";
}

ModelKind kind_from_name(std::string_view name) {
  if (name == "unet") return ModelKind::Unet;
  if (name == "esrt_lite" || name == "esrt") return ModelKind::EsrtLite;
  if (name == "bicubic_passthrough" || name == "bicubic") return ModelKind::BicubicPassthrough;
  throw SpecError("unknown model kind '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (in_channels != 7 || out_channels != 6) {
    throw SpecError("model must map 7 input channels to 6 output bands, got " + std::to_string(in_channels) + "->" +
                    std::to_string(out_channels));
  }
  if (kind == ModelKind::Unet) {
    if (unet.depth < 1 || unet.base_channels < 1) throw SpecError("unet depth and base_channels must be >= 1");
    if (unet.depth > 8) throw SpecError("unet depth " + std::to_string(unet.depth) + " is unreasonably deep");
  } else if (kind == ModelKind::EsrtLite) {
    const auto& e = esrt;
    if (e.backbone_blocks < 1 || e.transformer_blocks < 1 || e.embed_channels < 1 || e.heads < 1 || e.window < 1 ||
        e.split_factor < 1) {
      throw SpecError("esrt_lite counts must all be >= 1");
    }
    if (e.embed_channels % e.heads) {
      throw SpecError("esrt_lite heads (" + std::to_string(e.heads) + ") must divide embed_channels (" +
                      std::to_string(e.embed_channels) + ")");
    }
    if (e.embed_channels % e.split_factor || (e.embed_channels / e.split_factor) % e.heads) {
      throw SpecError("esrt_lite embed_channels / split_factor must be a positive multiple of heads");
    }
  }
}

std::size_t ModelSpec::spatial_multiple() const {
  switch (kind) {
    case ModelKind::Unet: return std::size_t{1} << unet.depth;
    case ModelKind::EsrtLite: return esrt.window;
    case ModelKind::BicubicPassthrough: return 1;
  }
  return 1;
}

json to_json(const ModelSpec& spec) {
  return json{{"kind", std::string(kind_name(spec.kind))},
              {"in_channels", spec.in_channels},
              {"out_channels", spec.out_channels},
              {"unet", {{"depth", spec.unet.depth}, {"base_channels", spec.unet.base_channels}}},
              {"esrt",
               {{"backbone_blocks", spec.esrt.backbone_blocks},
                {"transformer_blocks", spec.esrt.transformer_blocks},
                {"embed_channels", spec.esrt.embed_channels},
                {"heads", spec.esrt.heads},
                {"window", spec.esrt.window},
                {"split_factor", spec.esrt.split_factor}}},
              {"seed", spec.seed},
              {"padding", spec.padding == ag::PaddingMode::Zero ? "zero" : "circular"}};
}

ModelSpec model_spec_from_json(const json& doc) {
  ModelSpec spec;
  try {
    if (doc.contains("kind")) spec.kind = kind_from_name(doc["kind"].get<std::string>());
    spec.in_channels = doc.value("in_channels", spec.in_channels);
    spec.out_channels = doc.value("out_channels", spec.out_channels);
    if (doc.contains("unet")) {
      const auto& u = doc["unet"];
      spec.unet.depth = u.value("depth", spec.unet.depth);
      spec.unet.base_channels = u.value("base_channels", spec.unet.base_channels);
    }
    if (doc.contains("esrt")) {
      const auto& e = doc["esrt"];
      spec.esrt.backbone_blocks = e.value("backbone_blocks", spec.esrt.backbone_blocks);
      spec.esrt.transformer_blocks = e.value("transformer_blocks", spec.esrt.transformer_blocks);
      spec.esrt.embed_channels = e.value("embed_channels", spec.esrt.embed_channels);
      spec.esrt.heads = e.value("heads", spec.esrt.heads);
      spec.esrt.window = e.value("window", spec.esrt.window);
      spec.esrt.split_factor = e.value("split_factor", spec.esrt.split_factor);
    }
    spec.seed = doc.value("seed", spec.seed);
    const std::string padding = doc.value("padding", std::string("zero"));
    if (padding == "zero") {
      spec.padding = ag::PaddingMode::Zero;
    } else if (padding == "circular") {
      spec.padding = ag::PaddingMode::Circular;
    } else {
      throw SpecError("unknown padding mode '" + padding + "'");
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed model spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

}  // namespace bandbridge::models

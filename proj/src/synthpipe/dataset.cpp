#include "bandbridge/synthpipe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>

#include "bandbridge/core/error.hpp"
#include "bandbridge/core/parallel.hpp"
#include "bandbridge/core/random.hpp"
#include "bandbridge/raster/patch_io.hpp"
#include "bandbridge/synthpipe/coregister.hpp"

namespace bandbridge::synthpipe {

namespace fs = std::filesystem;
using nlohmann::json;

void DatasetConfig::validate() const {
  if (scenes < 3) throw SpecError("dataset needs at least 3 scenes, got " + std::to_string(scenes));
  double total = 0.0;
  for (const double r : ratios) {
    if (!(r >= 0.0)) throw SpecError("split ratios must be nonnegative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw SpecError("split ratios must sum to 1");
  if (max_shift < 0 || max_shift > kSearchRadius) {
    throw SpecError("max_shift must lie in [0, " + std::to_string(kSearchRadius) + "]");
  }
  scene.validate();
  split_scene_counts(scenes, ratios);
}

std::array<std::size_t, 3> split_scene_counts(std::size_t scenes, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(scenes);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < scenes; ++k, ++assigned) ++counts[order[k % 3]];
  for (std::size_t i = 0; i < 3; ++i) {
    if (counts[i] != 0 || ratios[i] <= 0.0) continue;
    const auto donor = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    if (counts[donor] > 1) {
      --counts[donor];
      ++counts[i];
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (counts[i] == 0) {
      throw SpecError("split '" + std::string(split_name(kSplits[i])) + "' would receive no scenes");
    }
  }
  return counts;
}

json to_json(const DatasetConfig& config) {
  const auto& s = config.scene;
  return json{{"scenes", config.scenes},
              {"seed", config.seed},
              {"ratios", config.ratios},
              {"max_shift", config.max_shift},
              {"size", s.size},
              {"mixing", s.mixing},
              {"blur_sigma", s.blur_sigma},
              {"lr_factor", s.lr_factor},
              {"pan_factor", s.pan_factor},
              {"pan_weights", s.pan_weights},
              {"noise_sigma", s.noise_sigma},
              {"hr_gsd_m", s.hr_gsd_m}};
}

DatasetConfig dataset_config_from_json(const json& doc, DatasetConfig base) {
  if (!doc.is_object()) throw SpecError("dataset config must be a JSON object");
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "scenes") base.scenes = value.get<std::size_t>();
      else if (key == "seed") base.seed = value.get<std::uint64_t>();
      else if (key == "ratios") base.ratios = value.get<std::array<double, 3>>();
      else if (key == "max_shift") base.max_shift = value.get<int>();
      else if (key == "size") base.scene.size = value.get<std::size_t>();
      else if (key == "mixing") base.scene.mixing = value.get<MixingMatrix>();
      else if (key == "blur_sigma") base.scene.blur_sigma = value.get<double>();
      else if (key == "lr_factor") base.scene.lr_factor = value.get<std::size_t>();
      else if (key == "pan_factor") base.scene.pan_factor = value.get<std::size_t>();
      else if (key == "pan_weights") base.scene.pan_weights = value.get<std::array<double, 4>>();
      else if (key == "noise_sigma") base.scene.noise_sigma = value.get<double>();
      else if (key == "hr_gsd_m") base.scene.hr_gsd_m = value.get<float>();
      else throw SpecError("unknown dataset config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed dataset config: ") + e.what());
  }
  base.validate();
  return base;
}

fs::path pair_path(const fs::path& root, Split split, const std::string& patch_id) {
  return root / std::string(split_name(split)) / (patch_id + ".bbp");
}

namespace {

std::string scene_name(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%04zu", index);
  return buf;
}

struct SceneRecord {
  std::string id;
  Split split = Split::Train;
  std::uint64_t seed = 0;
  Shift applied;
  Coregistration registration;
};

json region_json(const Region& r) { return json::array({r.x0, r.y0, r.x1, r.y1}); }

}  // namespace

json manifest_json(const SplitManifest& manifest, const DatasetConfig& config) {
  json splits = json::object();
  for (const auto& [split, entry] : manifest.splits) {
    json regions = json::array();
    for (const auto& r : entry.regions) regions.push_back(region_json(r));
    splits[std::string(split_name(split))] = {
        {"scenes", entry.scenes}, {"regions", regions}, {"patches", entry.patches}};
  }
  return json{{"format", "bandbridge-dataset"},
              {"version", 1},
              {"seed", manifest.seed},
              {"config", to_json(config)},
              {"splits", splits}};
}

SplitManifest read_manifest(const fs::path& root) {
  const fs::path path = root / "manifest.json";
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::Open, "cannot open " + path.string());
  SplitManifest manifest;
  try {
    const json doc = json::parse(in);
    if (doc.value("format", "") != "bandbridge-dataset") throw DataError(path.string() + " is not a dataset manifest");
    manifest.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& [name, entry] : doc.at("splits").items()) {
      SplitEntry e;
      e.scenes = entry.at("scenes").get<std::vector<std::string>>();
      e.patches = entry.at("patches").get<std::vector<std::string>>();
      for (const auto& r : entry.at("regions")) {
        const auto v = r.get<std::array<double, 4>>();
        e.regions.push_back({v[0], v[1], v[2], v[3]});
      }
      manifest.splits[split_from_name(name)] = std::move(e);
    }
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + path.string() + ": " + e.what());
  }
  return manifest;
}

SplitManifest build_dataset(const DatasetConfig& config, const fs::path& root) {
  config.validate();
  const auto counts = split_scene_counts(config.scenes, config.ratios);
  const Rng rng(config.seed);

  // Scene-level assignment: shuffled scene indices fill train, val, test in turn.
  std::vector<std::size_t> order(config.scenes);
  std::iota(order.begin(), order.end(), 0);
  Rng assign = rng.split(0);
  assign.shuffle(std::span<std::size_t>(order));

  const std::size_t columns = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(config.scenes))));
  const double extent = static_cast<double>(config.scene.size) * config.scene.hr_gsd_m;

  SplitManifest manifest;
  manifest.seed = config.seed;
  std::vector<SceneRecord> records(config.scenes);
  std::vector<SceneSpec> specs(config.scenes);
  for (std::size_t rank = 0; rank < config.scenes; ++rank) {
    const std::size_t index = order[rank];
    const Split split = rank < counts[0] ? Split::Train : rank < counts[0] + counts[1] ? Split::Val : Split::Test;
    SceneSpec spec = config.scene;
    spec.seed = rng.split(1000 + index).key();
    Rng shift = rng.split(2000 + index);
    spec.shift_dx = shift.between(-config.max_shift, config.max_shift);
    spec.shift_dy = shift.between(-config.max_shift, config.max_shift);
    spec.origin = {static_cast<float>(static_cast<double>(index % columns) * extent),
                   static_cast<float>(static_cast<double>(index / columns) * extent)};
    specs[index] = spec;
    records[index] = {scene_name(index), split, spec.seed, {spec.shift_dx, spec.shift_dy}, {}};
  }
  for (std::size_t index = 0; index < config.scenes; ++index) {
    auto& entry = manifest.splits[records[index].split];
    entry.scenes.push_back(records[index].id);
    entry.regions.push_back({specs[index].origin.x, specs[index].origin.y, specs[index].origin.x + extent,
                             specs[index].origin.y + extent});
  }
  for (const Split s : kSplits) fs::create_directories(root / std::string(split_name(s)));

  std::vector<std::vector<std::pair<Split, std::string>>> written(config.scenes);
  parallel_for(config.scenes, [&](std::size_t index) {
    SceneTriple scene = synth_scene(specs[index]);
    records[index].registration = coregister(scene.lr, scene.hr);
    scene.lr = std::move(records[index].registration.corrected);
    records[index].registration.corrected = {};
    for (const auto& pair : make_patch_pairs(scene, records[index].id, manifest)) {
      raster::write_pair(pair.input, pair.target, pair_path(root, pair.provenance.split, pair.id));
      written[index].emplace_back(pair.provenance.split, pair.id);
    }
  });
  for (const auto& scene_pairs : written) {
    for (const auto& [split, id] : scene_pairs) manifest.splits[split].patches.push_back(id);
  }
  for (auto& [split, entry] : manifest.splits) std::sort(entry.patches.begin(), entry.patches.end());

  json doc = manifest_json(manifest, config);
  json scenes = json::array();
  for (const auto& r : records) {
    scenes.push_back({{"id", r.id},
                      {"split", split_name(r.split)},
                      {"seed", r.seed},
                      {"applied_shift", {r.applied.dx, r.applied.dy}},
                      {"detected_shift", {r.registration.shift.dx, r.registration.shift.dy}},
                      {"ncc", r.registration.score}});
  }
  doc["scenes"] = scenes;
  std::ofstream out(root / "manifest.json");
  if (!out) throw IoError(IoError::Kind::Write, "cannot write " + (root / "manifest.json").string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError(IoError::Kind::Write, "short write to " + (root / "manifest.json").string());
  return manifest;
}

}  // namespace bandbridge::synthpipe

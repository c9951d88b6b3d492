#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "bandbridge/autograd/adam.hpp"
#include "bandbridge/harness/data.hpp"
#include "bandbridge/models/parameters.hpp"
#include "bandbridge/models/spec.hpp"
#include "json.hpp"

namespace bandbridge::harness {

struct TrainSpec {
  models::ModelSpec model;
  std::size_t epochs = 50;
  std::size_t batch_size = 20;
  std::size_t micro_batch = 5;
  std::size_t accumulation = 4;
  double lr = 1e-5;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  // epochs; 0 keeps only best and last
  std::filesystem::path dataset_root;
  std::filesystem::path out_dir;

  // Throws SpecError.
  void validate() const;
};

nlohmann::json to_json(const TrainSpec& spec);
TrainSpec train_spec_from_json(const nlohmann::json& doc, TrainSpec base = {});

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_ssim = 0.0;
  double val_nrmse = 0.0;
  double wall_seconds = 0.0;
};

nlohmann::json to_json(const EpochRecord& record);

struct RunLog {
  std::vector<EpochRecord> epochs;
  std::filesystem::path best_checkpoint;
  std::filesystem::path final_checkpoint;
};

// Owns the parameters and optimizer state of one model.
class Trainer {
 public:
  Trainer(models::ModelSpec spec, models::ParameterSet<float> params, ag::AdamConfig adam);

  // One optimizer step: every micro-batch contributes l1 / micro-batches to
  // the gradient, then Adam updates once. Returns the mean micro-batch loss.
  // Throws Error on a non-finite loss.
  double step(std::span<const ag::Tensorf> inputs, std::span<const ag::Tensorf> targets);

  // Mean l1 loss over `data` without updating anything.
  double loss(const SplitData& data, std::size_t micro_batch) const;

  const models::ModelSpec& spec() const noexcept { return spec_; }
  const models::ParameterSet<float>& params() const noexcept { return params_; }
  std::int64_t steps() const noexcept { return states_.empty() ? 0 : states_.front().t; }

 private:
  models::ModelSpec spec_;
  models::ParameterSet<float> params_;
  std::vector<ag::Tensorf> tensors_;
  std::vector<ag::AdamState<float>> states_;
};

struct TrainResult {
  models::ParameterSet<float> params;
  RunLog log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Seeded epoch loop over the train split with per-epoch validation.
// Writes <out>/train_spec.json, <out>/runlog.jsonl, <out>/best.bbc,
// <out>/last.bbc and <out>/epoch_NNN.bbc per cadence. The final
// incomplete effective batch of each epoch is dropped.
TrainResult train(const TrainSpec& spec, const EpochCallback& on_epoch = {});

}  // namespace bandbridge::harness

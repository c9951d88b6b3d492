#include "bandbridge/harness/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "bandbridge/autograd/ops.hpp"
#include "bandbridge/core/error.hpp"
#include "bandbridge/core/random.hpp"
#include "bandbridge/harness/evaluate.hpp"
#include "bandbridge/models/checkpoint.hpp"
#include "bandbridge/models/model.hpp"

namespace bandbridge::harness {

namespace fs = std::filesystem;
using nlohmann::json;

void TrainSpec::validate() const {
  model.validate();
  if (epochs < 1) throw SpecError("epochs must be >= 1");
  if (micro_batch < 1 || accumulation < 1) throw SpecError("micro_batch and accumulation must be >= 1");
  if (micro_batch * accumulation != batch_size) {
    throw SpecError("micro_batch x accumulation (" + std::to_string(micro_batch) + " x " +
                    std::to_string(accumulation) + ") must equal batch_size " + std::to_string(batch_size));
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) throw SpecError("lr must be a positive finite number");
}

json to_json(const TrainSpec& spec) {
  return json{{"model", models::to_json(spec.model)},
              {"epochs", spec.epochs},
              {"batch_size", spec.batch_size},
              {"micro_batch", spec.micro_batch},
              {"accumulation", spec.accumulation},
              {"lr", spec.lr},
              {"seed", spec.seed},
              {"checkpoint_every", spec.checkpoint_every},
              {"dataset", spec.dataset_root.string()},
              {"out", spec.out_dir.string()}};
}

TrainSpec train_spec_from_json(const json& doc, TrainSpec base) {
  if (!doc.is_object()) throw SpecError("train config must be a JSON object");
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "model") base.model = models::model_spec_from_json(value);
      else if (key == "epochs") base.epochs = value.get<std::size_t>();
      else if (key == "batch_size") base.batch_size = value.get<std::size_t>();
      else if (key == "micro_batch") base.micro_batch = value.get<std::size_t>();
      else if (key == "accumulation") base.accumulation = value.get<std::size_t>();
      else if (key == "lr") base.lr = value.get<double>();
      else if (key == "seed") base.seed = value.get<std::uint64_t>();
      else if (key == "checkpoint_every") base.checkpoint_every = value.get<std::size_t>();
      else if (key == "dataset") base.dataset_root = value.get<std::string>();
      else if (key == "out") base.out_dir = value.get<std::string>();
      else throw SpecError("unknown train config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed train config: ") + e.what());
  }
  return base;
}

json to_json(const EpochRecord& record) {
  return json{{"epoch", record.epoch},
              {"train_loss", record.train_loss},
              {"val_ssim", record.val_ssim},
              {"val_nrmse", record.val_nrmse},
              {"wall_seconds", record.wall_seconds}};
}

Trainer::Trainer(models::ModelSpec spec, models::ParameterSet<float> params, ag::AdamConfig adam)
    : spec_(std::move(spec)), params_(params.cast<float>()), tensors_(params_.tensors()) {
  for (const auto& t : tensors_) states_.push_back(ag::AdamState<float>::fresh(t, adam));
}

double Trainer::step(std::span<const ag::Tensorf> inputs, std::span<const ag::Tensorf> targets) {
  if (inputs.empty() || inputs.size() != targets.size()) throw ShapeError("Trainer::step: need matching micro-batches");
  params_.zero_grad();
  const float share = 1.0f / static_cast<float>(inputs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto loss = ag::l1_loss(models::forward(spec_, params_, inputs[i]), targets[i]);
    const double value = loss.item();
    if (!std::isfinite(value)) throw Error("non-finite loss in micro-batch " + std::to_string(i));
    ag::scale(loss, share).backward();
    total += value;
  }
  ag::adam_step<float>(tensors_, states_);
  return total / static_cast<double>(inputs.size());
}

double Trainer::loss(const SplitData& data, std::size_t micro_batch) const {
  const ag::NoGradGuard guard;
  double total = 0.0;
  for (std::size_t begin = 0; begin < data.size(); begin += micro_batch) {
    std::vector<std::size_t> idx(std::min(micro_batch, data.size() - begin));
    std::iota(idx.begin(), idx.end(), begin);
    const auto pred = models::forward(spec_, params_, stack(data.inputs, idx));
    total += ag::l1_loss(pred, stack(data.targets, idx)).item() * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(data.size());
}

namespace {

std::string metric_line(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "{\"epoch\":%zu,\"train_loss\":%.17g,\"val_ssim\":%.17g,\"val_nrmse\":%.17g}", r.epoch,
                r.train_loss, r.val_ssim, r.val_nrmse);
  return buf;
}

std::ofstream open_log(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::Open, "cannot write " + path.string());
  return out;
}

}  // namespace

TrainResult train(const TrainSpec& spec, const EpochCallback& on_epoch) {
  spec.validate();
  if (spec.out_dir.empty()) throw SpecError("train: output directory not set");
  const SplitData train_data = load_split(spec.dataset_root, synthpipe::Split::Train);
  const SplitData val_data = load_split(spec.dataset_root, synthpipe::Split::Val);
  if (train_data.size() < spec.batch_size) {
    throw DataError("train split has " + std::to_string(train_data.size()) + " patches, fewer than one batch of " +
                    std::to_string(spec.batch_size));
  }

  fs::create_directories(spec.out_dir);
  {
    std::ofstream out(spec.out_dir / "train_spec.json");
    out << to_json(spec).dump(2) << '\n';
  }
  auto runlog = open_log(spec.out_dir / "runlog.jsonl");
  auto metric_log = open_log(spec.out_dir / "metrics.jsonl");

  Trainer trainer(spec.model, models::build<float>(spec.model), ag::AdamConfig{.lr = spec.lr});
  const std::string name(models::kind_name(spec.model.kind));
  const Rng shuffler(spec.seed);
  const std::size_t steps = train_data.size() / spec.batch_size;

  RunLog log;
  double best_ssim = -INFINITY;
  for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(train_data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = shuffler.split(epoch);
    rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      std::vector<ag::Tensorf> inputs, targets;
      for (std::size_t m = 0; m < spec.accumulation; ++m) {
        const std::span<const std::size_t> idx(order.data() + s * spec.batch_size + m * spec.micro_batch,
                                               spec.micro_batch);
        inputs.push_back(stack(train_data.inputs, idx));
        targets.push_back(stack(train_data.targets, idx));
      }
      try {
        loss_sum += trainer.step(inputs, targets);
      } catch (const Error& e) {
        throw Error("training aborted at epoch " + std::to_string(epoch) + ", batch " + std::to_string(s + 1) + ": " +
                    e.what());
      }
    }

    const auto report = evaluate(Method::from_params(name, spec.model, trainer.params()), val_data);
    EpochRecord record{epoch, loss_sum / static_cast<double>(steps), report.ssim.mean, report.nrmse.mean, 0.0};
    record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.epochs.push_back(record);
    runlog << to_json(record).dump() << '\n' << std::flush;
    metric_log << metric_line(record) << '\n' << std::flush;

    const auto epoch32 = static_cast<std::uint32_t>(epoch);
    if (record.val_ssim > best_ssim) {
      best_ssim = record.val_ssim;
      log.best_checkpoint = spec.out_dir / "best.bbc";
      models::save_checkpoint(log.best_checkpoint, spec.model, trainer.params(), epoch32);
    }
    if (spec.checkpoint_every && epoch % spec.checkpoint_every == 0) {
      char file[32];
      std::snprintf(file, sizeof file, "epoch_%03zu.bbc", epoch);
      models::save_checkpoint(spec.out_dir / file, spec.model, trainer.params(), epoch32);
    }
    if (on_epoch) on_epoch(record);
  }
  log.final_checkpoint = spec.out_dir / "last.bbc";
  models::save_checkpoint(log.final_checkpoint, spec.model, trainer.params(),
                          static_cast<std::uint32_t>(spec.epochs));
  return TrainResult{trainer.params(), std::move(log)};
}

}  // namespace bandbridge::harness

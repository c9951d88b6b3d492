// Acceptance run: one PASS/FAIL line per criterion, INFO lines for
// measurements that are reported but not gated. Usage: acceptance <work dir>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "bandbridge/core/random.hpp"
#include "bandbridge/harness/evaluate.hpp"
#include "bandbridge/harness/train.hpp"
#include "bandbridge/models/checkpoint.hpp"
#include "bandbridge/models/model.hpp"
#include "bandbridge/raster/patch_io.hpp"
#include "bandbridge/selftest/selftest.hpp"
#include "bandbridge/synthpipe/coregister.hpp"
#include "bandbridge/synthpipe/dataset.hpp"
#include "bandbridge/synthpipe/scene.hpp"

using namespace bandbridge;
namespace fs = std::filesystem;

namespace {

// Desk-scale training schedule for the ordering criterion.
constexpr std::size_t kUnetEpochs = 3;
constexpr double kUnetLr = 1e-3;
constexpr std::size_t kEsrtEpochs = 2;
constexpr double kEsrtLr = 3e-4;
constexpr double kOrderingMargin = 0.01;

constexpr double kAccumulationTolerance = 1e-5;
constexpr double kGradcheckBudgetSeconds = 300.0;
constexpr std::size_t kGradInstances = 20;
constexpr std::size_t kCoregSeeds = 50;
constexpr double kCoregNoise = 0.01;

struct Outcome {
  std::string label;
  bool passed;
  std::string detail;
};

std::vector<Outcome> outcomes;
std::ofstream results;

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

void emit(const std::string& line) {
  std::cout << line << std::endl;
  results << line << std::endl;
}

void record(const std::string& label, bool passed, const std::string& detail) {
  outcomes.push_back({label, passed, detail});
  emit(std::string(passed ? "PASS  " : "FAIL  ") + label + "  (" + detail + ")");
}

void info(const std::string& label, const std::string& detail) { emit("INFO  " + label + "  (" + detail + ")"); }

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : bytes) h = (h ^ c) * 1099511628211ull;
  return h;
}

std::map<fs::path, std::uint64_t> hash_tree(const fs::path& root) {
  std::map<fs::path, std::uint64_t> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root)] = fnv1a(slurp(e.path()));
  }
  return out;
}

bool all_passed(const std::vector<selftest::CheckLine>& lines, std::string& failures) {
  bool ok = true;
  for (const auto& l : lines) {
    if (!l.passed) {
      ok = false;
      failures += " " + l.name + ": " + l.detail + ";";
    }
  }
  return ok;
}

void sequential(bool on) {
  if (on) {
    setenv("BANDBRIDGE_THREADS", "0", 1);
  } else {
    unsetenv("BANDBRIDGE_THREADS");
  }
}

void gradient_oracles() {
  Stopwatch clock;
  const auto lines = selftest::gradient_checks(kGradInstances);
  const double seconds = clock.seconds();
  double worst = 0.0;
  std::string failures;
  bool ok = all_passed(lines, failures);
  for (const auto& l : lines) {
    const auto pos = l.detail.find("max rel err ");
    if (pos != std::string::npos) worst = std::max(worst, std::atof(l.detail.c_str() + pos + 12));
  }
  ok = ok && seconds < kGradcheckBudgetSeconds;
  record("1 gradient oracle suite", ok,
         format("%zu checks x %zu instances, worst rel err %.3g (< 1e-4), %.1f s (< %.0f s)%s", lines.size(),
                kGradInstances, worst, seconds, kGradcheckBudgetSeconds, failures.c_str()));
}

void metric_oracles() {
  std::string failures;
  const auto lines = selftest::metric_checks();
  std::string detail;
  for (const auto& l : lines) detail += l.name + ": " + l.detail + "; ";
  record("2 metric oracles", all_passed(lines, failures), detail.substr(0, detail.size() - 2));
}

void bicubic_oracles() {
  std::string failures;
  const auto lines = selftest::bicubic_checks();
  std::string detail;
  for (const auto& l : lines) detail += l.name + ": " + l.detail + "; ";
  record("3 bicubic kernel oracle", all_passed(lines, failures), detail.substr(0, detail.size() - 2));
}

ag::Tensorf crop_batch(const harness::SplitData& data, std::size_t first, std::size_t count, bool inputs,
                       std::size_t size) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), first);
  const auto full = harness::stack(inputs ? std::span(data.inputs) : std::span(data.targets), idx);
  return ag::slice(ag::slice(full, 2, 0, size), 3, 0, size).detach();
}

void accumulation_equivalence(const fs::path& dataset) {
  const auto train = harness::load_split(dataset, synthpipe::Split::Train);
  const models::ModelSpec spec;  // default UNet
  constexpr std::size_t crop = 64;

  // Warm up so the zero-initialised head no longer blocks gradients to the
  // rest of the network; the compared step then moves every tensor.
  harness::Trainer warm(spec, models::build<float>(spec), {.lr = 1e-3});
  for (std::size_t s = 0; s < 3; ++s) {
    const std::vector<ag::Tensorf> x{crop_batch(train, 40 + 4 * s, 4, true, crop)};
    const std::vector<ag::Tensorf> y{crop_batch(train, 40 + 4 * s, 4, false, crop)};
    warm.step(x, y);
  }

  harness::Trainer accumulated(spec, warm.params(), {.lr = 1e-5});
  harness::Trainer full(spec, warm.params(), {.lr = 1e-5});
  std::vector<ag::Tensorf> xs, ys;
  for (std::size_t m = 0; m < 4; ++m) {
    xs.push_back(crop_batch(train, 5 * m, 5, true, crop));
    ys.push_back(crop_batch(train, 5 * m, 5, false, crop));
  }
  const double loss_acc = accumulated.step(xs, ys);
  const std::vector<ag::Tensorf> fx{crop_batch(train, 0, 20, true, crop)}, fy{crop_batch(train, 0, 20, false, crop)};
  const double loss_full = full.step(fx, fy);

  double worst_param = 0.0, worst_update = 0.0;
  std::size_t moved = 0;
  const auto& before = warm.params().entries();
  for (std::size_t i = 0; i < before.size(); ++i) {
    const auto w = before[i].value.data();
    const auto a = accumulated.params().entries()[i].value.data();
    const auto b = full.params().entries()[i].value.data();
    double diff = 0, norm = 0, step = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      diff += (double(a[k]) - b[k]) * (double(a[k]) - b[k]);
      norm += double(b[k]) * b[k];
      step += (double(b[k]) - w[k]) * (double(b[k]) - w[k]);
    }
    if (norm > 0) worst_param = std::max(worst_param, std::sqrt(diff / norm));
    if (step > 0) {
      ++moved;
      worst_update = std::max(worst_update, std::sqrt(diff / step));
    }
  }
  const bool ok = worst_param < kAccumulationTolerance && std::abs(loss_acc - loss_full) <= 1e-6 * loss_full;
  record("4 accumulation equivalence", ok,
         format("default UNet, 4x5 vs 1x20 on %zux%zu crops, lr 1e-5: max per-tensor rel param diff %.3g (< 1e-5), "
                "loss %.9f vs %.9f",
                crop, crop, worst_param, loss_acc, loss_full));
  info("4 accumulation update detail",
       format("%zu/%zu tensors moved; max |delta_acc - delta_full| / |delta_full| per tensor %.3g", moved,
              before.size(), worst_update));
}

void initial_identity(const fs::path& dataset) {
  const auto test = harness::load_split(dataset, synthpipe::Split::Test);
  const auto bicubic = harness::evaluate(harness::Method::bicubic(), test);
  bool ok = true;
  std::string detail = format("%zu test patches, bicubic SSIM %.6f NRMSE %.6f", test.size(), bicubic.ssim.mean,
                              bicubic.nrmse.mean);
  for (const auto kind : {models::ModelKind::Unet, models::ModelKind::EsrtLite}) {
    models::ModelSpec spec;
    spec.kind = kind;
    const auto method = harness::Method::from_params(std::string(models::kind_name(kind)), spec, models::build<float>(spec));
    auto report = harness::evaluate(method, test);
    report.method = bicubic.method;
    const bool same = report == bicubic;
    ok = ok && same;
    detail += format("; untrained %s %s", std::string(models::kind_name(kind)).c_str(), same ? "identical" : "DIFFERS");
  }
  record("5 initial-state identity", ok, detail);
}

struct TrainedModel {
  harness::TrainResult result;
  metrics::MetricReport test;
  double seconds = 0;
};

TrainedModel train_model(models::ModelKind kind, std::size_t epochs, double lr, const fs::path& dataset,
                         const fs::path& out) {
  harness::TrainSpec spec;
  spec.model.kind = kind;
  spec.epochs = epochs;
  spec.lr = lr;
  spec.checkpoint_every = 1;
  spec.dataset_root = dataset;
  spec.out_dir = out;
  const std::string name(models::kind_name(kind));
  Stopwatch clock;
  TrainedModel t;
  t.result = harness::train(spec, [&](const harness::EpochRecord& r) {
    info(name + " epoch " + std::to_string(r.epoch),
         format("train loss %.5f, val SSIM %.4f, val NRMSE %.4f, %.0f s", r.train_loss, r.val_ssim, r.val_nrmse,
                r.wall_seconds));
  });
  t.test = harness::evaluate(harness::Method::from_checkpoint(t.result.log.best_checkpoint, name), dataset,
                             synthpipe::Split::Test);
  t.seconds = clock.seconds();
  return t;
}

void ordering_and_read_only(const fs::path& dataset, const fs::path& work) {
  const auto bicubic = harness::evaluate(harness::Method::bicubic(), dataset, synthpipe::Split::Test);
  const auto unet = train_model(models::ModelKind::Unet, kUnetEpochs, kUnetLr, dataset, work / "unet");
  const auto esrt = train_model(models::ModelKind::EsrtLite, kEsrtEpochs, kEsrtLr, dataset, work / "esrt_lite");

  const bool unet_ok = unet.test.ssim.mean > bicubic.ssim.mean + kOrderingMargin &&
                       unet.test.nrmse.mean < bicubic.nrmse.mean - kOrderingMargin;
  const bool esrt_ok = esrt.test.ssim.mean > bicubic.ssim.mean && esrt.test.nrmse.mean < bicubic.nrmse.mean;
  record("6 ordering at desk scale", unet_ok && esrt_ok,
         format("test SSIM/NRMSE: bicubic %.4f/%.4f, UNet %.4f/%.4f (%zu ep, lr %g, %.0f s), ESRT-lite %.4f/%.4f "
                "(%zu ep, lr %g, %.0f s); UNet margin %+.4f/%+.4f (need > 0.01 each)",
                bicubic.ssim.mean, bicubic.nrmse.mean, unet.test.ssim.mean, unet.test.nrmse.mean, kUnetEpochs, kUnetLr,
                unet.seconds, esrt.test.ssim.mean, esrt.test.nrmse.mean, kEsrtEpochs, kEsrtLr, esrt.seconds,
                unet.test.ssim.mean - bicubic.ssim.mean, bicubic.nrmse.mean - unet.test.nrmse.mean));
  info("6 UNet vs ESRT-lite (not gated)",
       format("SSIM gap %+.4f, NRMSE gap %+.4f (positive favours UNet)", unet.test.ssim.mean - esrt.test.ssim.mean,
              esrt.test.nrmse.mean - unet.test.nrmse.mean));

  // Learning signal: the model after one epoch has lower train loss than untrained.
  try {
    const auto train = harness::load_split(dataset, synthpipe::Split::Train);
    for (const char* name : {"unet", "esrt_lite"}) {
      const auto epoch1 = models::load_checkpoint(work / name / "epoch_001.bbc");
      const harness::Trainer untrained(epoch1.spec, models::build<float>(epoch1.spec), {});
      const harness::Trainer trained(epoch1.spec, epoch1.params, {});
      info(std::string("learning signal ") + name,
           format("train l1 untrained %.5f, after epoch 1 %.5f", untrained.loss(train, 5), trained.loss(train, 5)));
    }
  } catch (const std::exception& e) {
    info("learning signal", std::string("not measured: ") + e.what());
  }
}

void coregistration() {
  std::size_t exact = 0;
  std::set<std::pair<int, int>> covered;
  std::string misses;
  for (std::size_t s = 0; s < kCoregSeeds; ++s) {
    Rng rng(9000 + s);
    synthpipe::SceneSpec spec;
    spec.seed = rng.split(0).key();
    spec.size = 256;
    spec.noise_sigma = kCoregNoise;
    spec.shift_dx = static_cast<int>(rng.between(-3, 3));
    spec.shift_dy = static_cast<int>(rng.between(-3, 3));
    const auto scene = synthpipe::synth_scene(spec);
    const auto reg = synthpipe::coregister(scene.lr, scene.hr);
    covered.insert({spec.shift_dx, spec.shift_dy});
    if (reg.shift == synthpipe::Shift{spec.shift_dx, spec.shift_dy}) {
      ++exact;
    } else {
      misses += format(" seed %zu: applied (%d,%d) got (%d,%d);", s, spec.shift_dx, spec.shift_dy, reg.shift.dx,
                       reg.shift.dy);
    }
  }
  record("7 co-registration", exact == kCoregSeeds,
         format("%zu/%zu exact at noise %.3f, %zu distinct shifts in [-3,3]^2%s", exact, kCoregSeeds, kCoregNoise,
                covered.size(), misses.c_str()));
}

void determinism(const synthpipe::DatasetConfig& config, const fs::path& dataset, const fs::path& work,
                 const std::map<fs::path, std::uint64_t>& dataset_hashes) {
  sequential(true);
  std::vector<std::string> notes;
  bool ok = true;

  // Dataset regenerated from the same (seed, config).
  const auto twin = work / "dataset_twin";
  synthpipe::build_dataset(config, twin);
  const auto twin_hashes = hash_tree(twin);
  const bool same_dataset = twin_hashes == dataset_hashes;
  ok = ok && same_dataset;
  notes.push_back(format("dataset rebuild: %zu files %s", twin_hashes.size(), same_dataset ? "identical" : "DIFFER"));
  fs::remove_all(twin);

  // Epoch metric logs from two identical runs.
  synthpipe::DatasetConfig small = config;
  small.scenes = 5;
  small.scene.size = 256;
  synthpipe::build_dataset(small, work / "small");
  harness::TrainSpec spec;
  spec.model.unet = {2, 8};
  spec.epochs = 2;
  spec.batch_size = 4;
  spec.micro_batch = 2;
  spec.accumulation = 2;
  spec.lr = 1e-3;
  spec.seed = 3;
  spec.dataset_root = work / "small";
  for (const char* run : {"log_a", "log_b"}) {
    spec.out_dir = work / run;
    harness::train(spec);
  }
  const auto log_a = slurp(work / "log_a" / "metrics.jsonl");
  const bool same_log = !log_a.empty() && log_a == slurp(work / "log_b" / "metrics.jsonl") &&
                        slurp(work / "log_a" / "last.bbc") == slurp(work / "log_b" / "last.bbc");
  ok = ok && same_log;
  notes.push_back(format("epoch metric log and final checkpoint across two runs %s", same_log ? "identical" : "DIFFER"));

  // BBP1 round-trip of every small-dataset pair file.
  std::size_t pairs = 0;
  bool bbp_ok = true;
  for (const auto& e : fs::recursive_directory_iterator(work / "small")) {
    if (e.path().extension() != ".bbp") continue;
    const auto [input, target] = raster::read_pair(e.path());
    const auto copy = work / "roundtrip.bbp";
    raster::write_pair(input, target, copy);
    const auto [input2, target2] = raster::read_pair(copy);
    bbp_ok = bbp_ok && slurp(copy) == slurp(e.path()) && input2 == input && target2 == target;
    ++pairs;
  }
  ok = ok && bbp_ok && pairs > 0;
  notes.push_back(format("BBP1 re-encode of %zu pairs %s", pairs, bbp_ok ? "bitwise equal" : "DIFFERS"));

  // Checkpoint round-trip of both trained models.
  bool ckpt_ok = true;
  for (const char* name : {"unet", "esrt_lite"}) {
    const auto path = work / name / "best.bbc";
    const auto loaded = models::load_checkpoint(path);
    const auto copy = work / "roundtrip.bbc";
    models::save_checkpoint(copy, loaded.spec, loaded.params, loaded.epoch);
    const auto again = models::load_checkpoint(copy);
    bool params_equal = again.params.size() == loaded.params.size();
    for (std::size_t i = 0; params_equal && i < loaded.params.size(); ++i) {
      const auto a = loaded.params.entries()[i].value.data(), b = again.params.entries()[i].value.data();
      params_equal = std::equal(a.begin(), a.end(), b.begin(), b.end());
    }
    ckpt_ok = ckpt_ok && params_equal && slurp(copy) == slurp(path);
  }
  ok = ok && ckpt_ok;
  notes.push_back(format("checkpoint save/load %s", ckpt_ok ? "bitwise equal" : "DIFFERS"));

  // Evaluation is read-only and repeatable.
  const auto ckpt = work / "unet" / "best.bbc";
  const auto ckpt_hash = fnv1a(slurp(ckpt));
  const auto r1 = harness::evaluate(harness::Method::from_checkpoint(ckpt), dataset, synthpipe::Split::Test);
  const auto r2 = harness::evaluate(harness::Method::from_checkpoint(ckpt), dataset, synthpipe::Split::Test);
  const bool untouched = hash_tree(dataset) == dataset_hashes && fnv1a(slurp(ckpt)) == ckpt_hash &&
                         metrics::to_json(r1).dump() == metrics::to_json(r2).dump();
  ok = ok && untouched;
  notes.push_back(format("evaluate leaves dataset and checkpoint %s", untouched ? "byte-unchanged" : "MODIFIED"));

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  record("8 determinism and round-trips", ok, detail);
  sequential(false);
}

void split_hygiene(const fs::path& dataset) {
  const auto manifest = synthpipe::read_manifest(dataset);
  bool ok = manifest.regions_disjoint();
  std::string detail = format("manifest regions %s", ok ? "pairwise disjoint" : "OVERLAP");

  // Footprints read back from the pair files, checked against each other
  // directly rather than through the manifest regions.
  std::vector<std::pair<synthpipe::Split, synthpipe::Region>> footprints;
  std::size_t mislabelled = 0;
  std::set<std::string> scenes_seen, ids_seen;
  bool ids_unique = true;
  for (const auto& [split, entry] : manifest.splits) {
    for (const auto& scene : entry.scenes) ids_unique = scenes_seen.insert(scene).second && ids_unique;
    for (const auto& id : entry.patches) {
      ids_unique = ids_seen.insert(id).second && ids_unique;
      const auto [input, target] = raster::read_pair(synthpipe::pair_path(dataset, split, id));
      const double extent = static_cast<double>(target.width()) * target.gsd_m();
      const synthpipe::Region fp{target.origin().x, target.origin().y, target.origin().x + extent,
                                 target.origin().y + extent};
      if (manifest.split_of(fp) != split) ++mislabelled;
      footprints.emplace_back(split, fp);
    }
  }
  std::size_t cross_overlaps = 0;
  for (std::size_t i = 0; i < footprints.size(); ++i) {
    for (std::size_t j = i + 1; j < footprints.size(); ++j) {
      const auto& [sa, a] = footprints[i];
      const auto& [sb, b] = footprints[j];
      if (sa != sb && a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1) ++cross_overlaps;
    }
  }
  ok = ok && mislabelled == 0 && cross_overlaps == 0 && ids_unique;
  detail += format("; %zu patch footprints, %zu outside their split's regions, %zu cross-split overlaps; scene and "
                   "patch ids %s",
                   footprints.size(), mislabelled, cross_overlaps, ids_unique ? "unique to one split" : "SHARED");
  record("9 split hygiene", ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::current_path() / "acceptance_work";
  fs::remove_all(work);
  fs::create_directories(work);
  results.open(work / "results.txt");
  Stopwatch total;

  auto run = [](const std::string& label, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      record(label, false, std::string("exception: ") + e.what());
    }
  };

  run("1 gradient oracle suite", gradient_oracles);
  run("2 metric oracles", metric_oracles);
  run("3 bicubic kernel oracle", bicubic_oracles);

  const synthpipe::DatasetConfig config;  // 40 scenes -> 384/128/128 patches
  const auto dataset = work / "dataset";
  Stopwatch build;
  synthpipe::build_dataset(config, dataset);
  const auto dataset_hashes = hash_tree(dataset);
  info("default dataset", format("%zu files, built in %.1f s", dataset_hashes.size(), build.seconds()));

  run("4 accumulation equivalence", [&] { accumulation_equivalence(dataset); });
  run("5 initial-state identity", [&] { initial_identity(dataset); });
  run("6 ordering at desk scale", [&] { ordering_and_read_only(dataset, work); });
  run("7 co-registration", coregistration);
  run("8 determinism and round-trips", [&] { determinism(config, dataset, work, dataset_hashes); });
  run("9 split hygiene", [&] { split_hygiene(dataset); });

  std::size_t passed = 0;
  for (const auto& o : outcomes) passed += o.passed;
  emit(format("%zu/%zu criteria passed in %.0f s", passed, outcomes.size(), total.seconds()));
  return passed == outcomes.size() ? 0 : 1;
}

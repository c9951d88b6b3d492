#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "bandbridge/core/error.hpp"
#include "bandbridge/harness/evaluate.hpp"
#include "bandbridge/harness/report.hpp"
#include "bandbridge/harness/train.hpp"
#include "bandbridge/raster/patch_io.hpp"
#include "bandbridge/raster/rgb.hpp"
#include "bandbridge/selftest/selftest.hpp"
#include "bandbridge/synthpipe/dataset.hpp"

namespace fs = std::filesystem;
using namespace bandbridge;
using nlohmann::json;

namespace {

// Section of a JSON config file; files may hold {"dataset": {...}, "train": {...}}.
json config_section(const std::string& path, const char* section) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
  return doc.contains(section) ? doc[section] : json::object();
}

template <typename T>
void override(T& field, const std::optional<T>& flag) {
  if (flag) field = *flag;
}

struct SynthArgs {
  std::string config, out;
  std::optional<std::size_t> scenes, size, lr_factor, pan_factor;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_shift;
  std::optional<double> blur_sigma, noise_sigma;
  std::vector<double> ratios;
};

int run_synth(const SynthArgs& a) {
  auto config = synthpipe::dataset_config_from_json(config_section(a.config, "dataset"));
  override(config.scenes, a.scenes);
  override(config.seed, a.seed);
  override(config.max_shift, a.max_shift);
  override(config.scene.size, a.size);
  override(config.scene.lr_factor, a.lr_factor);
  override(config.scene.pan_factor, a.pan_factor);
  override(config.scene.blur_sigma, a.blur_sigma);
  override(config.scene.noise_sigma, a.noise_sigma);
  if (!a.ratios.empty()) config.ratios = {a.ratios[0], a.ratios[1], a.ratios[2]};
  const auto manifest = synthpipe::build_dataset(config, a.out);
  for (const auto& [split, entry] : manifest.splits) {
    std::printf("%-5s %3zu scenes %4zu patches\n", std::string(synthpipe::split_name(split)).c_str(),
                entry.scenes.size(), entry.patches.size());
  }
  return 0;
}

struct TrainArgs {
  std::string config, dataset, out, model, padding;
  std::optional<std::size_t> epochs, batch_size, micro_batch, accumulation, checkpoint_every, depth, base_channels;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
};

int run_train(const TrainArgs& a) {
  auto spec = harness::train_spec_from_json(config_section(a.config, "train"));
  if (!a.model.empty()) spec.model.kind = models::kind_from_name(a.model);
  if (!a.padding.empty()) {
    if (a.padding != "zero" && a.padding != "circular") throw UsageError("--padding must be zero or circular");
    spec.model.padding = a.padding == "zero" ? ag::PaddingMode::Zero : ag::PaddingMode::Circular;
  }
  override(spec.model.unet.depth, a.depth);
  override(spec.model.unet.base_channels, a.base_channels);
  override(spec.epochs, a.epochs);
  override(spec.batch_size, a.batch_size);
  override(spec.micro_batch, a.micro_batch);
  override(spec.accumulation, a.accumulation);
  override(spec.checkpoint_every, a.checkpoint_every);
  override(spec.lr, a.lr);
  if (a.seed) spec.seed = spec.model.seed = *a.seed;
  if (!a.dataset.empty()) spec.dataset_root = a.dataset;
  if (!a.out.empty()) spec.out_dir = a.out;
  if (spec.dataset_root.empty() || spec.out_dir.empty()) throw UsageError("train needs --dataset and --out");
  spec.validate();

  const auto result = harness::train(spec, [](const harness::EpochRecord& r) {
    std::printf("epoch %3zu  loss %.6f  val ssim %.4f  val nrmse %.4f  (%.1f s)\n", r.epoch, r.train_loss, r.val_ssim,
                r.val_nrmse, r.wall_seconds);
    std::fflush(stdout);
  });
  std::printf("best checkpoint %s\nlast checkpoint %s\n", result.log.best_checkpoint.c_str(),
              result.log.final_checkpoint.c_str());
  return 0;
}

struct EvalArgs {
  std::string dataset, split = "test", method = "bicubic", checkpoint, name, out, csv;
};

int run_evaluate(const EvalArgs& a) {
  harness::Method method;
  if (a.method == "checkpoint") {
    if (a.checkpoint.empty()) throw UsageError("--method checkpoint needs --checkpoint");
    method = harness::Method::from_checkpoint(a.checkpoint, a.name);
  } else if (a.method != "bicubic") {
    throw UsageError("--method must be bicubic or checkpoint");
  } else if (!a.name.empty()) {
    method.name = a.name;
  }
  const auto report = harness::evaluate(method, a.dataset, synthpipe::split_from_name(a.split));
  if (!a.out.empty()) {
    metrics::write_report_json(report, a.out);
  } else {
    std::cout << metrics::to_json(report).dump(2) << '\n';
  }
  if (!a.csv.empty()) metrics::write_records_csv(report, a.csv);
  std::fprintf(stderr, "%s: %zu patches, SSIM %.4f +/- %.4f, NRMSE %.4f +/- %.4f\n", report.method.c_str(),
               report.records.size(), report.ssim.mean, report.ssim.std, report.nrmse.mean, report.nrmse.std);
  return 0;
}

struct ReportArgs {
  std::vector<std::string> reports;
  std::string out, primary, dataset, split = "test", checkpoint;
};

int run_report(const ReportArgs& a) {
  std::vector<metrics::MetricReport> reports;
  for (const auto& path : a.reports) reports.push_back(metrics::read_report_json(path));
  std::optional<harness::GallerySource> gallery;
  if (!a.dataset.empty()) {
    const std::string primary = a.primary.empty() ? reports.front().method : a.primary;
    harness::Method method = harness::Method::bicubic();
    if (!a.checkpoint.empty()) {
      method = harness::Method::from_checkpoint(a.checkpoint, primary);
    } else if (primary != "bicubic") {
      throw UsageError("rendering the '" + primary + "' gallery needs --checkpoint");
    }
    gallery = harness::GallerySource{std::move(method), a.dataset, synthpipe::split_from_name(a.split)};
  }
  harness::write_report(reports, a.out, a.primary, gallery);
  std::cout << harness::format_table(reports);
  return 0;
}

struct ExportArgs {
  std::string file, part = "input", out;
};

int run_export(const ExportArgs& a) {
  raster::RasterPatch patch;
  if (a.part == "patch") {
    patch = raster::read_patch(fs::path(a.file));
  } else if (a.part == "input" || a.part == "target") {
    auto [input, target] = raster::read_pair(a.file);
    patch = a.part == "input" ? std::move(input) : std::move(target);
  } else {
    throw UsageError("--part must be input, target or patch");
  }
  raster::export_rgb(patch, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-sensor multispectral harmonization: data synthesis, training, evaluation"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth-data", "Generate a synthetic paired dataset");
  s->add_option("--config", synth.config, "JSON config file (\"dataset\" section)");
  s->add_option("--out", synth.out, "Dataset root")->required();
  s->add_option("--scenes", synth.scenes);
  s->add_option("--seed", synth.seed);
  s->add_option("--size", synth.size, "HR pixels per scene side");
  s->add_option("--lr-factor", synth.lr_factor);
  s->add_option("--pan-factor", synth.pan_factor);
  s->add_option("--max-shift", synth.max_shift, "Largest misregistration in LR pixels");
  s->add_option("--blur-sigma", synth.blur_sigma);
  s->add_option("--noise-sigma", synth.noise_sigma);
  s->add_option("--ratios", synth.ratios, "train val test fractions")->expected(3);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--config", train.config, "JSON config file (\"train\" section)");
  t->add_option("--dataset", train.dataset);
  t->add_option("--out", train.out, "Run directory");
  t->add_option("--model", train.model, "unet or esrt_lite");
  t->add_option("--padding", train.padding, "zero or circular");
  t->add_option("--depth", train.depth);
  t->add_option("--base-channels", train.base_channels);
  t->add_option("--epochs", train.epochs);
  t->add_option("--batch-size", train.batch_size);
  t->add_option("--micro-batch", train.micro_batch);
  t->add_option("--accumulation", train.accumulation);
  t->add_option("--lr", train.lr);
  t->add_option("--seed", train.seed, "Shuffle and initialisation seed");
  t->add_option("--checkpoint-every", train.checkpoint_every);

  EvalArgs eval;
  auto* e = app.add_subcommand("evaluate", "Per-patch SSIM/NRMSE on a split");
  e->add_option("--dataset", eval.dataset)->required();
  e->add_option("--split", eval.split, "train, val or test");
  e->add_option("--method", eval.method, "bicubic or checkpoint");
  e->add_option("--checkpoint", eval.checkpoint);
  e->add_option("--name", eval.name, "Method name in the report");
  e->add_option("--out", eval.out, "Report JSON (stdout when omitted)");
  e->add_option("--csv", eval.csv, "Per-patch CSV");

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Summary table, box-plot data and sample gallery");
  r->add_option("reports", report.reports, "MetricReport JSON files")->required();
  r->add_option("--out", report.out)->required();
  r->add_option("--primary", report.primary, "Method the gallery is drawn from (default: first report)");
  r->add_option("--dataset", report.dataset, "Dataset root; enables PNG gallery rendering");
  r->add_option("--split", report.split);
  r->add_option("--checkpoint", report.checkpoint, "Checkpoint of the primary method");

  ExportArgs exp;
  auto* x = app.add_subcommand("export-rgb", "Stretched RGB PNG of a patch file");
  x->add_option("file", exp.file, "BBP1 pair or patch file")->required();
  x->add_option("--part", exp.part, "input, target, or patch for single-record files");
  x->add_option("--out", exp.out)->required();

  std::size_t instances = 20;
  auto* st = app.add_subcommand("selftest", "Gradient, metric and resampling oracle checks");
  st->add_option("--instances", instances, "Random instances per gradient check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 2;
  }

  try {
    if (s->parsed()) return run_synth(synth);
    if (t->parsed()) return run_train(train);
    if (e->parsed()) return run_evaluate(eval);
    if (r->parsed()) return run_report(report);
    if (x->parsed()) return run_export(exp);
    if (st->parsed()) return selftest::run_selftest(std::cout) ? 0 : 1;
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << '\n';
    return 2;
  } catch (const SpecError& err) {
    std::cerr << "invalid configuration: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 2;
}

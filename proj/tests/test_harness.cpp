#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "bandbridge/core/error.hpp"
#include "bandbridge/core/random.hpp"
#include "bandbridge/harness/evaluate.hpp"
#include "bandbridge/harness/report.hpp"
#include "bandbridge/harness/train.hpp"
#include "bandbridge/metrics/metrics.hpp"
#include "bandbridge/models/model.hpp"
#include "bandbridge/synthpipe/dataset.hpp"
#include "test_util.hpp"

using namespace bandbridge;
using namespace bandbridge::harness;
namespace fs = std::filesystem;

namespace {

models::ModelSpec tiny_unet() {
  models::ModelSpec s;
  s.kind = models::ModelKind::Unet;
  s.unet = {1, 4};
  return s;
}

ag::Tensorf random_batch(Rng& rng, std::size_t n, std::size_t c, std::size_t size, double lo, double hi) {
  std::vector<float> v(n * c * size * size);
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return ag::Tensorf(ag::Shape{n, c, size, size}, std::move(v));
}

ag::Tensorf rows(const ag::Tensorf& t, std::size_t begin, std::size_t count) {
  return ag::slice(t, 0, begin, begin + count).detach();
}

class HarnessTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new TempDir;
    synthpipe::DatasetConfig config;
    config.scenes = 5;
    config.seed = 11;
    config.scene.size = 256;
    synthpipe::build_dataset(config, root_->path / "data");
  }
  static void TearDownTestSuite() {
    delete root_;
    root_ = nullptr;
  }
  static fs::path data() { return root_->path / "data"; }
  static fs::path scratch() { return root_->path; }

  static TrainSpec tiny_spec(const fs::path& out) {
    TrainSpec spec;
    spec.model = tiny_unet();
    spec.epochs = 2;
    spec.batch_size = 4;
    spec.micro_batch = 2;
    spec.accumulation = 2;
    spec.lr = 1e-3;
    spec.seed = 5;
    spec.checkpoint_every = 1;
    spec.dataset_root = data();
    spec.out_dir = out;
    return spec;
  }

  static TempDir* root_;
};

TempDir* HarnessTest::root_ = nullptr;

}  // namespace

TEST(TrainSpec, Validation) {
  TrainSpec spec;
  EXPECT_NO_THROW(spec.validate());
  spec.epochs = 0;
  EXPECT_THROW(spec.validate(), SpecError);
  spec = {};
  spec.batch_size = 21;
  EXPECT_THROW(spec.validate(), SpecError);
  spec = {};
  spec.lr = 0.0;
  EXPECT_THROW(spec.validate(), SpecError);
}

TEST(TrainSpec, JsonRoundTrip) {
  TrainSpec spec;
  spec.model = tiny_unet();
  spec.epochs = 3;
  spec.lr = 2e-4;
  spec.dataset_root = "/data/x";
  spec.out_dir = "runs/y";
  EXPECT_EQ(to_json(train_spec_from_json(to_json(spec))), to_json(spec));
  EXPECT_THROW(train_spec_from_json({{"epoch", 3}}), SpecError);
}

TEST(Trainer, AccumulationMatchesFullBatchStep) {
  Rng rng(1);
  const auto x = random_batch(rng, 20, 7, 16, 0.0, 1.0);
  const auto y = random_batch(rng, 20, 6, 16, 0.0, 1.0);
  // Move away from the zero-initialised head so every tensor gets a gradient.
  Trainer warm(tiny_unet(), models::build<float>(tiny_unet()), {.lr = 1e-2});
  for (int i = 0; i < 3; ++i) {
    const std::vector<ag::Tensorf> xi{random_batch(rng, 4, 7, 16, 0.0, 1.0)}, yi{random_batch(rng, 4, 6, 16, 0.0, 1.0)};
    warm.step(xi, yi);
  }

  Trainer accumulated(tiny_unet(), warm.params(), {.lr = 1e-5});
  Trainer full(tiny_unet(), warm.params(), {.lr = 1e-5});
  std::vector<ag::Tensorf> xs, ys;
  for (std::size_t m = 0; m < 4; ++m) {
    xs.push_back(rows(x, 5 * m, 5));
    ys.push_back(rows(y, 5 * m, 5));
  }
  const double loss_acc = accumulated.step(xs, ys);
  const std::vector<ag::Tensorf> fx{x}, fy{y};
  const double loss_full = full.step(fx, fy);
  EXPECT_NEAR(loss_acc, loss_full, 1e-6);
  for (std::size_t i = 0; i < full.params().size(); ++i) {
    const auto a = accumulated.params().entries()[i].value.data(), b = full.params().entries()[i].value.data();
    double diff = 0.0, norm = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      diff += (double(a[k]) - b[k]) * (double(a[k]) - b[k]);
      norm += double(b[k]) * b[k];
    }
    EXPECT_LT(std::sqrt(diff / norm), 1e-5) << full.params().entries()[i].name;
  }
}

TEST(Trainer, ZeroLearningRateChangesNothing) {
  Rng rng(2);
  Trainer t(tiny_unet(), models::build<float>(tiny_unet()), {.lr = 0.0});
  const auto before = t.params().cast<float>();
  for (int i = 0; i < 3; ++i) {
    const std::vector<ag::Tensorf> x{random_batch(rng, 2, 7, 16, 0.0, 1.0)}, y{random_batch(rng, 2, 6, 16, 0.0, 1.0)};
    t.step(x, y);
  }
  EXPECT_EQ(t.steps(), 3);
  for (std::size_t i = 0; i < before.size(); ++i) {
    const auto a = before.entries()[i].value.data(), b = t.params().entries()[i].value.data();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST(Trainer, NonFiniteLossAborts) {
  Rng rng(3);
  Trainer t(tiny_unet(), models::build<float>(tiny_unet()), {.lr = 1e-3});
  auto x = random_batch(rng, 1, 7, 16, 0.0, 1.0);
  x.mutable_data()[5] = NAN;
  const std::vector<ag::Tensorf> xs{x}, ys{random_batch(rng, 1, 6, 16, 0.0, 1.0)};
  EXPECT_THROW(t.step(xs, ys), Error);
}

TEST_F(HarnessTest, BicubicEvaluationIsThePassthroughMetric) {
  const auto split = load_split(data(), synthpipe::Split::Val);
  const auto report = evaluate(Method::bicubic(), split);
  ASSERT_EQ(report.records.size(), split.size());
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto bicubic = split.inputs[i].select(raster::kTargetBands);
    EXPECT_EQ(report.records[i].patch_id, split.ids[i]);
    EXPECT_EQ(report.records[i].ssim, metrics::ssim(bicubic, split.targets[i]));
    EXPECT_EQ(report.records[i].nrmse, metrics::nrmse(bicubic, split.targets[i]));
  }
  EXPECT_TRUE(metrics::report_schema_errors(metrics::to_json(report)).empty());
}

TEST_F(HarnessTest, UntrainedModelsReproduceTheBicubicReport) {
  const auto split = load_split(data(), synthpipe::Split::Test);
  auto bicubic = evaluate(Method::bicubic(), split);
  models::ModelSpec esrt;
  esrt.kind = models::ModelKind::EsrtLite;
  for (const auto& spec : {tiny_unet(), esrt}) {
    auto report = evaluate(Method::from_params("bicubic", spec, models::build<float>(spec)), split);
    EXPECT_EQ(report, bicubic);
  }
}

TEST_F(HarnessTest, MissingInputsAreReported) {
  EXPECT_THROW(load_split(scratch() / "nowhere", synthpipe::Split::Test), DataError);
  EXPECT_THROW(Method::from_checkpoint(scratch() / "none.bbc"), DataError);
  auto spec = tiny_spec(scratch() / "run_missing");
  spec.dataset_root = scratch() / "nowhere";
  EXPECT_THROW(train(spec), DataError);
}

TEST_F(HarnessTest, TrainingIsDeterministicAndEvaluationReadOnly) {
  const auto first = train(tiny_spec(scratch() / "run_a"));
  const auto second = train(tiny_spec(scratch() / "run_b"));
  ASSERT_EQ(first.log.epochs.size(), 2u);
  for (const char* file : {"metrics.jsonl", "best.bbc", "last.bbc", "epoch_001.bbc", "epoch_002.bbc"}) {
    EXPECT_TRUE(fs::exists(scratch() / "run_a" / file)) << file;
    EXPECT_EQ(slurp(scratch() / "run_a" / file), slurp(scratch() / "run_b" / file)) << file;
  }
  std::ifstream log(scratch() / "run_a" / "runlog.jsonl");
  std::string line;
  std::size_t epoch = 0;
  while (std::getline(log, line)) {
    const auto rec = nlohmann::json::parse(line);
    EXPECT_EQ(rec["epoch"].get<std::size_t>(), ++epoch);
    EXPECT_TRUE(std::isfinite(rec["train_loss"].get<double>()));
  }
  EXPECT_EQ(epoch, 2u);

  // Evaluation leaves the dataset and the checkpoint untouched, and repeats exactly.
  std::vector<std::pair<fs::path, std::string>> before;
  for (const auto& entry : fs::recursive_directory_iterator(data())) {
    if (entry.is_regular_file()) before.emplace_back(entry.path(), slurp(entry.path()));
  }
  const auto ckpt = first.log.best_checkpoint;
  const auto ckpt_bytes = slurp(ckpt);
  const auto method = Method::from_checkpoint(ckpt);
  const auto r1 = evaluate(method, data(), synthpipe::Split::Test);
  const auto r2 = evaluate(Method::from_checkpoint(ckpt), data(), synthpipe::Split::Test);
  EXPECT_EQ(metrics::to_json(r1).dump(), metrics::to_json(r2).dump());
  EXPECT_EQ(slurp(ckpt), ckpt_bytes);
  for (const auto& [path, bytes] : before) EXPECT_EQ(slurp(path), bytes) << path;
}

TEST(Report, GalleryPicksNearestQuantileWithLowestIdOnTies) {
  std::vector<metrics::PatchRecord> records;
  Rng rng(4);
  for (int i = 0; i < 41; ++i) {
    records.push_back({"p" + std::to_string(1000 + (i * 17) % 41), 0.9, std::round(rng.uniform(0.0, 20.0)) / 100.0});
  }
  const auto report = metrics::aggregate("unet", records);
  const auto picks = gallery_picks(report);
  ASSERT_EQ(picks.size(), 5u);

  std::vector<double> sorted;
  for (const auto& r : report.records) sorted.push_back(r.nrmse);
  std::sort(sorted.begin(), sorted.end());
  for (const auto& pick : picks) {
    const double pos = pick.quantile * (sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double q = sorted[lo] + (sorted[std::min(lo + 1, sorted.size() - 1)] - sorted[lo]) * (pos - lo);
    EXPECT_DOUBLE_EQ(pick.target_nrmse, q);
    auto ranked = report.records;
    std::sort(ranked.begin(), ranked.end(), [q](const auto& a, const auto& b) {
      return std::pair(std::abs(a.nrmse - q), a.patch_id) < std::pair(std::abs(b.nrmse - q), b.patch_id);
    });
    EXPECT_EQ(pick.patch_id, ranked.front().patch_id);
  }
}

TEST(Report, TableOrderAndDegenerateRow) {
  const auto a = metrics::aggregate("bicubic", {{"x", 0.80, 0.2}, {"y", 0.82, 0.18}});
  const auto b = metrics::aggregate("unet", {{"x", 0.90, 0.1}, {"y", 0.91, 0.09}});
  const auto c = metrics::aggregate("solo", {{"x", 0.85, 0.15}});
  const auto ordered = table_order({a, c, b});
  EXPECT_EQ(ordered[0].method, "unet");
  EXPECT_EQ(ordered[1].method, "solo");
  EXPECT_EQ(ordered[2].method, "bicubic");
  EXPECT_EQ(c.ssim.std, 0.0);
  const auto text = format_table({a, b, c});
  EXPECT_LT(text.find("unet"), text.find("bicubic"));
  EXPECT_NE(text.find("0.8500 +/- 0.0000"), std::string::npos) << text;
}

TEST(Report, TukeyBox) {
  const auto box = box_stats("m", "nrmse", {1, 2, 3, 4, 5, 6, 7, 8, 100});
  EXPECT_DOUBLE_EQ(box.q1, 3.0);
  EXPECT_DOUBLE_EQ(box.median, 5.0);
  EXPECT_DOUBLE_EQ(box.q3, 7.0);
  EXPECT_DOUBLE_EQ(box.whisker_low, 1.0);
  EXPECT_DOUBLE_EQ(box.whisker_high, 8.0);
  EXPECT_EQ(box.outliers, 1u);
  EXPECT_THROW(box_stats("m", "ssim", {}), DataError);
}

TEST_F(HarnessTest, ReportWritesTablesAndGallery) {
  const auto report = evaluate(Method::bicubic(), data(), synthpipe::Split::Test);
  const auto out = scratch() / "report";
  write_report({report}, out, "bicubic", GallerySource{Method::bicubic(), data(), synthpipe::Split::Test});
  for (const char* f : {"table.txt", "table.csv", "boxplot.csv", "gallery.csv", "gallery/q05_input.png",
                        "gallery/q50_prediction.png", "gallery/q95_target.png"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_THROW(write_report({}, out), DataError);
  EXPECT_THROW(write_report({report}, out, "unet"), DataError);
}

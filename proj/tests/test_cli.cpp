#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "bandbridge/metrics/report.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(BANDBRIDGE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string synth_args(const fs::path& out) { return "synth-data --out " + out.string() + " --scenes 3 --size 128 --seed 9"; }

}  // namespace

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("synth-data"), 2);
  TempDir dir;
  EXPECT_EQ(run(synth_args(dir.path / "d") + " --ratios 0.5 0.5 0.5"), 2);
  EXPECT_EQ(run("train --dataset " + (dir.path / "d").string()), 2);
  EXPECT_EQ(run("evaluate --dataset x --method checkpoint"), 2);
}

TEST(Cli, MissingDataExitsWithOne) {
  TempDir dir;
  EXPECT_EQ(run("evaluate --dataset " + (dir.path / "absent").string()), 1);
  EXPECT_EQ(run("export-rgb " + (dir.path / "absent.bbp").string() + " --out " + (dir.path / "x.png").string()), 1);
}

TEST(Cli, SynthEvaluateReportRoundTrip) {
  TempDir dir;
  const auto data = dir.path / "d";
  ASSERT_EQ(run(synth_args(data)), 0);
  ASSERT_EQ(run(synth_args(dir.path / "again")), 0);
  EXPECT_EQ(slurp(data / "manifest.json"), slurp(dir.path / "again" / "manifest.json"));

  const auto report = dir.path / "bicubic.json";
  ASSERT_EQ(run("evaluate --dataset " + data.string() + " --split test --out " + report.string() + " --csv " +
                (dir.path / "bicubic.csv").string()),
            0);
  const auto doc = nlohmann::json::parse(slurp(report));
  EXPECT_TRUE(bandbridge::metrics::report_schema_errors(doc).empty());
  EXPECT_EQ(doc["method"], "bicubic");
  EXPECT_TRUE(fs::exists(dir.path / "bicubic.csv"));

  ASSERT_EQ(run("report " + report.string() + " --out " + (dir.path / "rep").string() + " --dataset " + data.string()),
            0);
  EXPECT_TRUE(fs::exists(dir.path / "rep" / "table.txt"));
  EXPECT_TRUE(fs::exists(dir.path / "rep" / "gallery" / "q50_prediction.png"));

  const auto manifest = nlohmann::json::parse(slurp(data / "manifest.json"));
  const auto id = manifest["splits"]["test"]["patches"][0].get<std::string>();
  EXPECT_EQ(run("export-rgb " + (data / "test" / (id + ".bbp")).string() + " --part target --out " +
                (dir.path / "t.png").string()),
            0);
  EXPECT_TRUE(fs::exists(dir.path / "t.png"));
}

TEST(Cli, TrainOneEpoch) {
  TempDir dir;
  const auto data = dir.path / "d";
  ASSERT_EQ(run(synth_args(data)), 0);
  const auto out = dir.path / "run";
  EXPECT_EQ(run("train --dataset " + data.string() + " --out " + out.string() +
                " --model unet --depth 1 --base-channels 4 --epochs 1 --batch-size 1 --micro-batch 1"
                " --accumulation 1 --lr 1e-3"),
            0);
  EXPECT_TRUE(fs::exists(out / "best.bbc"));
  EXPECT_EQ(run("evaluate --dataset " + data.string() + " --method checkpoint --checkpoint " +
                (out / "best.bbc").string()),
            0);
}

TEST(Cli, Selftest) { EXPECT_EQ(run("selftest"), 0); }

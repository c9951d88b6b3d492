#include <gtest/gtest.h>

#include <algorithm>

#include "bandbridge/core/error.hpp"
#include "bandbridge/metrics/metrics.hpp"
#include "bandbridge/metrics/report.hpp"
#include "bandbridge/selftest/oracles.hpp"
#include "test_util.hpp"

using namespace bandbridge;

TEST(Ssim, MatchesBruteForceOnMultibandPairs) {
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto a = selftest::random_patch(100 + i, 6, 24, 29), b = selftest::random_patch(200 + i, 6, 24, 29);
    EXPECT_NEAR(metrics::ssim(a, b), selftest::naive_ssim(a, b), 1e-9);
  }
}

TEST(Ssim, IdentitySymmetryAndBounds) {
  const auto a = selftest::random_patch(1, 3, 16, 16), b = selftest::random_patch(2, 3, 16, 16);
  EXPECT_NEAR(metrics::ssim(a, a), 1.0, 1e-12);
  EXPECT_NEAR(metrics::ssim(a, b), metrics::ssim(b, a), 1e-12);
  EXPECT_LT(metrics::ssim(a, b), 1.0);
  EXPECT_GT(metrics::ssim(a, b), -1.0);
}

TEST(Ssim, ConstantShiftClosedForm) {
  auto x = selftest::random_patch(3, 1, 11, 11), y = x;
  for (auto& v : x.mutable_pixels()) v = 0.5f;
  for (auto& v : y.mutable_pixels()) v = 0.6f;
  EXPECT_NEAR(metrics::ssim(x, y), 0.983609, 1e-6);
}

TEST(Ssim, WindowIsNormalisedAndSymmetric) {
  const auto g = metrics::ssim_window();
  double total = 0.0;
  for (const double v : g) total += v;
  EXPECT_NEAR(total, 1.0, 1e-15);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i], g[g.size() - 1 - i]);
}

TEST(Ssim, RejectsSmallOrMismatchedInputs) {
  const auto small = selftest::random_patch(4, 1, 10, 32);
  EXPECT_THROW(metrics::ssim(small, small), ShapeError);
  const auto a = selftest::random_patch(5, 2, 16, 16), b = selftest::random_patch(6, 3, 16, 16);
  EXPECT_THROW(metrics::ssim(a, b), ShapeError);
  EXPECT_THROW(metrics::nrmse(a, b), ShapeError);
}

TEST(Nrmse, MatchesDefinitionAndRejectsConstantTruth) {
  const auto a = selftest::random_patch(7, 2, 8, 8), b = selftest::random_patch(8, 2, 8, 8);
  EXPECT_NEAR(metrics::nrmse(a, b), selftest::naive_nrmse(a, b), 1e-12);
  EXPECT_EQ(metrics::nrmse(a, a), 0.0);
  auto flat = b;
  for (auto& v : flat.mutable_pixels()) v = 0.2f;
  EXPECT_THROW(metrics::nrmse(a, flat), DataError);
}

TEST(Summary, QuartilesAndSampleStd) {
  const std::vector<double> v{4, 1, 3, 2, 5};
  const auto s = metrics::summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(2.5));
  EXPECT_DOUBLE_EQ(s.min, 1.0);
  EXPECT_DOUBLE_EQ(s.q1, 2.0);
  EXPECT_DOUBLE_EQ(s.median, 3.0);
  EXPECT_DOUBLE_EQ(s.q3, 4.0);
  EXPECT_DOUBLE_EQ(s.max, 5.0);
  const std::vector<double> one{0.7};
  EXPECT_EQ(metrics::summarize(one).std, 0.0);
}

TEST(Report, AggregateIsOrderIndependent) {
  std::vector<metrics::PatchRecord> records;
  for (int i = 0; i < 17; ++i) records.push_back({"p" + std::to_string(100 + i), 0.8 + 0.01 * ((i * 7) % 5), 0.1 / (i + 1)});
  const auto a = metrics::aggregate("m", records);
  std::reverse(records.begin(), records.end());
  std::rotate(records.begin(), records.begin() + 5, records.end());
  const auto b = metrics::aggregate("m", records);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(std::is_sorted(a.records.begin(), a.records.end(),
                             [](const auto& x, const auto& y) { return x.patch_id < y.patch_id; }));
  EXPECT_THROW(metrics::aggregate("m", {}), DataError);
}

TEST(Report, JsonAndCsvRoundTrips) {
  TempDir dir;
  std::vector<metrics::PatchRecord> records{{"a", 0.91234567891234567, 0.123}, {"b", 0.5, 1.0 / 3.0}, {"c", 0.7, 0.2}};
  const auto report = metrics::aggregate("unet", records);
  metrics::write_report_json(report, dir.path / "r.json");
  EXPECT_EQ(metrics::read_report_json(dir.path / "r.json"), report);
  EXPECT_TRUE(metrics::report_schema_errors(metrics::to_json(report)).empty());

  metrics::write_records_csv(report, dir.path / "r.csv");
  const auto back = metrics::read_records_csv(dir.path / "r.csv");
  EXPECT_EQ(back, report.records);
  // Aggregates recomputed from the CSV equal the report's.
  EXPECT_EQ(metrics::aggregate("unet", back), report);
}

TEST(Report, SchemaErrorsListProblems) {
  auto doc = metrics::to_json(metrics::aggregate("m", {{"a", 0.9, 0.1}}));
  doc.erase("method");
  doc["records"][0]["ssim"] = "high";
  const auto errors = metrics::report_schema_errors(doc);
  EXPECT_GE(errors.size(), 2u);
  EXPECT_FALSE(metrics::report_schema_errors(nlohmann::json::array()).empty());
}

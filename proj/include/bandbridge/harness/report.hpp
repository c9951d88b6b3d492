#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bandbridge/harness/evaluate.hpp"
#include "bandbridge/metrics/report.hpp"

namespace bandbridge::harness {

inline constexpr std::array<double, 5> kGalleryQuantiles{0.05, 0.25, 0.50, 0.75, 0.95};

struct BoxStats {
  std::string method;
  std::string metric;
  double whisker_low = 0, q1 = 0, median = 0, q3 = 0, whisker_high = 0;
  std::size_t outliers = 0;
};

// Tukey box: whiskers reach the most extreme values within 1.5 IQR.
BoxStats box_stats(const std::string& method, const std::string& metric, std::vector<double> values);

struct GalleryPick {
  double quantile = 0;
  double target_nrmse = 0;
  std::string patch_id;
  double nrmse = 0;
};

// For each quantile, the record whose NRMSE is nearest the quantile of the
// report's NRMSE values; ties go to the lowest patch id.
std::vector<GalleryPick> gallery_picks(const metrics::MetricReport& report,
                                       std::span<const double> quantiles = kGalleryQuantiles);

// Methods in descending mean SSIM (ties by name).
std::vector<metrics::MetricReport> table_order(std::vector<metrics::MetricReport> reports);
std::string format_table(const std::vector<metrics::MetricReport>& reports);

struct GallerySource {
  Method method;  // the primary method, used to render predictions
  std::filesystem::path dataset_root;
  synthpipe::Split split = synthpipe::Split::Test;
};

// Writes table.txt, table.csv, boxplot.csv, gallery.csv and, when a source
// is given, gallery/q<NN>_{input,prediction,target}.png for the primary
// report (reports.front() unless `primary` names another). Throws DataError
// on empty input.
void write_report(const std::vector<metrics::MetricReport>& reports, const std::filesystem::path& out_dir,
                  const std::string& primary = {}, const std::optional<GallerySource>& gallery = std::nullopt);

}  // namespace bandbridge::harness

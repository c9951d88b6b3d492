#include "bandbridge/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bandbridge/core/error.hpp"
#include "bandbridge/core/stats.hpp"
#include "bandbridge/raster/rgb.hpp"

namespace bandbridge::harness {

namespace fs = std::filesystem;

BoxStats box_stats(const std::string& method, const std::string& metric, std::vector<double> values) {
  if (values.empty()) throw DataError("box_stats: no values");
  std::sort(values.begin(), values.end());
  BoxStats box{method, metric};
  box.q1 = quantile_sorted(values, 0.25);
  box.median = quantile_sorted(values, 0.5);
  box.q3 = quantile_sorted(values, 0.75);
  const double reach = 1.5 * (box.q3 - box.q1);
  box.whisker_low = box.q1;
  box.whisker_high = box.q3;
  for (const double v : values) {
    if (v < box.q1 - reach || v > box.q3 + reach) {
      ++box.outliers;
      continue;
    }
    box.whisker_low = std::min(box.whisker_low, v);
    box.whisker_high = std::max(box.whisker_high, v);
  }
  return box;
}

std::vector<GalleryPick> gallery_picks(const metrics::MetricReport& report, std::span<const double> quantiles) {
  if (report.records.empty()) throw DataError("gallery_picks: empty report");
  std::vector<double> sorted;
  for (const auto& r : report.records) sorted.push_back(r.nrmse);
  std::sort(sorted.begin(), sorted.end());

  std::vector<GalleryPick> picks;
  for (const double q : quantiles) {
    const double target = quantile_sorted(sorted, q);
    const metrics::PatchRecord* best = nullptr;
    for (const auto& r : report.records) {
      if (!best) {
        best = &r;
        continue;
      }
      const double d = std::abs(r.nrmse - target), db = std::abs(best->nrmse - target);
      if (d < db || (d == db && r.patch_id < best->patch_id)) best = &r;
    }
    picks.push_back({q, target, best->patch_id, best->nrmse});
  }
  return picks;
}

std::vector<metrics::MetricReport> table_order(std::vector<metrics::MetricReport> reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
    if (a.ssim.mean != b.ssim.mean) return a.ssim.mean > b.ssim.mean;
    return a.method < b.method;
  });
  return reports;
}

std::string format_table(const std::vector<metrics::MetricReport>& reports) {
  std::size_t width = 6;
  for (const auto& r : reports) width = std::max(width, r.method.size());
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %-17s  %-17s  %s\n", static_cast<int>(width), "Method", "SSIM", "NRMSE",
                "Patches");
  out << line;
  for (const auto& r : table_order(reports)) {
    std::snprintf(line, sizeof line, "%-*s  %.4f +/- %.4f    %.4f +/- %.4f    %zu\n", static_cast<int>(width),
                  r.method.c_str(), r.ssim.mean, r.ssim.std, r.nrmse.mean, r.nrmse.std, r.records.size());
    out << line;
  }
  return out.str();
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::Open, "cannot write " + path.string());
  return out;
}

void render_gallery(const std::vector<GalleryPick>& picks, const GallerySource& source, const fs::path& dir) {
  fs::create_directories(dir);
  const auto data = load_split(source.dataset_root, source.split);
  for (const auto& pick : picks) {
    const auto it = std::find(data.ids.begin(), data.ids.end(), pick.patch_id);
    if (it == data.ids.end()) {
      throw DataError("gallery patch " + pick.patch_id + " is not in the " +
                      std::string(synthpipe::split_name(source.split)) + " split");
    }
    const auto i = static_cast<std::size_t>(it - data.ids.begin());
    char stem[16];
    std::snprintf(stem, sizeof stem, "q%02d_", static_cast<int>(std::lround(pick.quantile * 100)));
    raster::export_rgb(data.inputs[i], dir / (std::string(stem) + "input.png"));
    raster::export_rgb(predict(source.method, data.inputs[i]), dir / (std::string(stem) + "prediction.png"));
    raster::export_rgb(data.targets[i], dir / (std::string(stem) + "target.png"));
  }
}

}  // namespace

void write_report(const std::vector<metrics::MetricReport>& reports, const fs::path& out_dir,
                  const std::string& primary, const std::optional<GallerySource>& gallery) {
  if (reports.empty()) throw DataError("report: no metric reports given");
  fs::create_directories(out_dir);

  open_out(out_dir / "table.txt") << format_table(reports);
  {
    auto csv = open_out(out_dir / "table.csv");
    csv << "method,ssim_mean,ssim_std,nrmse_mean,nrmse_std,patches\n";
    char line[256];
    for (const auto& r : table_order(reports)) {
      std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g,%.17g,%zu\n", r.method.c_str(), r.ssim.mean, r.ssim.std,
                    r.nrmse.mean, r.nrmse.std, r.records.size());
      csv << line;
    }
  }
  {
    auto csv = open_out(out_dir / "boxplot.csv");
    csv << "method,metric,whisker_low,q1,median,q3,whisker_high,outliers\n";
    char line[256];
    for (const auto& r : reports) {
      std::vector<double> ssim, nrmse;
      for (const auto& rec : r.records) {
        ssim.push_back(rec.ssim);
        nrmse.push_back(rec.nrmse);
      }
      for (const auto& box : {box_stats(r.method, "ssim", ssim), box_stats(r.method, "nrmse", nrmse)}) {
        std::snprintf(line, sizeof line, "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n", box.method.c_str(),
                      box.metric.c_str(), box.whisker_low, box.q1, box.median, box.q3, box.whisker_high, box.outliers);
        csv << line;
      }
    }
  }

  const metrics::MetricReport* main = &reports.front();
  if (!primary.empty()) {
    const auto it = std::find_if(reports.begin(), reports.end(), [&](const auto& r) { return r.method == primary; });
    if (it == reports.end()) throw DataError("report: primary method '" + primary + "' not among the reports");
    main = &*it;
  }
  const auto picks = gallery_picks(*main);
  {
    auto csv = open_out(out_dir / "gallery.csv");
    csv << "quantile,target_nrmse,patch_id,nrmse\n";
    char line[256];
    for (const auto& p : picks) {
      std::snprintf(line, sizeof line, "%.2f,%.17g,%s,%.17g\n", p.quantile, p.target_nrmse, p.patch_id.c_str(), p.nrmse);
      csv << line;
    }
  }
  if (gallery) render_gallery(picks, *gallery, out_dir / "gallery");
}

}  // namespace bandbridge::harness

#include "bandbridge/metrics/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bandbridge/core/error.hpp"
#include "bandbridge/core/stats.hpp"

namespace bandbridge::metrics {

using nlohmann::json;

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw DataError("summarize: no values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double total = 0.0;
  for (const double v : sorted) total += v;
  Summary s;
  s.mean = total / n;
  if (sorted.size() > 1) {
    double sq = 0.0;
    for (const double v : sorted) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / (n - 1.0));
  }
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q3 = quantile_sorted(sorted, 0.75);
  return s;
}

MetricReport aggregate(std::string method, std::vector<PatchRecord> records) {
  if (records.empty()) throw DataError("aggregate: no records for method '" + method + "'");
  std::sort(records.begin(), records.end(), [](const PatchRecord& a, const PatchRecord& b) {
    return a.patch_id < b.patch_id;
  });
  std::vector<double> s, n;
  for (const auto& r : records) {
    s.push_back(r.ssim);
    n.push_back(r.nrmse);
  }
  MetricReport report{std::move(method), std::move(records), summarize(s), summarize(n)};
  return report;
}

namespace {

json summary_json(const Summary& s) {
  return json{{"mean", s.mean}, {"std", s.std},       {"min", s.min}, {"q1", s.q1},
              {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

Summary summary_from(const json& j) {
  return Summary{j.at("mean").get<double>(), j.at("std").get<double>(),    j.at("min").get<double>(),
                 j.at("q1").get<double>(),   j.at("median").get<double>(), j.at("q3").get<double>(),
                 j.at("max").get<double>()};
}

constexpr const char* kSummaryKeys[] = {"mean", "std", "min", "q1", "median", "q3", "max"};

}  // namespace

json to_json(const MetricReport& report) {
  json records = json::array();
  for (const auto& r : report.records) records.push_back({{"patch_id", r.patch_id}, {"ssim", r.ssim}, {"nrmse", r.nrmse}});
  return json{{"method", report.method},
              {"count", report.records.size()},
              {"records", std::move(records)},
              {"aggregates", {{"ssim", summary_json(report.ssim)}, {"nrmse", summary_json(report.nrmse)}}}};
}

std::vector<std::string> report_schema_errors(const json& doc) {
  std::vector<std::string> errors;
  if (!doc.is_object()) return {"report must be an object"};
  if (!doc.contains("method") || !doc["method"].is_string()) errors.emplace_back("method: missing or not a string");
  if (!doc.contains("count") || !doc["count"].is_number_unsigned()) errors.emplace_back("count: missing or not unsigned");
  if (!doc.contains("records") || !doc["records"].is_array() || doc["records"].empty()) {
    errors.emplace_back("records: missing, empty or not an array");
  } else {
    if (doc.contains("count") && doc["count"].is_number_unsigned() &&
        doc["count"].get<std::size_t>() != doc["records"].size()) {
      errors.emplace_back("count does not match records length");
    }
    for (std::size_t i = 0; i < doc["records"].size(); ++i) {
      const auto& r = doc["records"][i];
      const std::string at = "records[" + std::to_string(i) + "]";
      if (!r.is_object() || !r.contains("patch_id") || !r["patch_id"].is_string()) {
        errors.push_back(at + ".patch_id invalid");
        continue;
      }
      if (!r.contains("ssim") || !r["ssim"].is_number() || r["ssim"].get<double>() < -1.0 ||
          r["ssim"].get<double>() > 1.0) {
        errors.push_back(at + ".ssim missing or outside [-1, 1]");
      }
      if (!r.contains("nrmse") || !r["nrmse"].is_number() || r["nrmse"].get<double>() < 0.0) {
        errors.push_back(at + ".nrmse missing or negative");
      }
    }
  }
  if (!doc.contains("aggregates") || !doc["aggregates"].is_object()) {
    errors.emplace_back("aggregates: missing");
  } else {
    for (const char* metric : {"ssim", "nrmse"}) {
      const auto& a = doc["aggregates"];
      if (!a.contains(metric) || !a[metric].is_object()) {
        errors.push_back(std::string("aggregates.") + metric + " missing");
        continue;
      }
      for (const char* key : kSummaryKeys) {
        if (!a[metric].contains(key) || !a[metric][key].is_number()) {
          errors.push_back(std::string("aggregates.") + metric + "." + key + " missing");
        }
      }
    }
  }
  return errors;
}

MetricReport report_from_json(const json& doc) {
  if (const auto errors = report_schema_errors(doc); !errors.empty()) {
    throw DataError("invalid metric report: " + errors.front());
  }
  MetricReport report;
  report.method = doc.at("method").get<std::string>();
  for (const auto& r : doc.at("records")) {
    report.records.push_back({r.at("patch_id").get<std::string>(), r.at("ssim").get<double>(), r.at("nrmse").get<double>()});
  }
  report.ssim = summary_from(doc.at("aggregates").at("ssim"));
  report.nrmse = summary_from(doc.at("aggregates").at("nrmse"));
  return report;
}

void write_report_json(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::Open, "cannot open " + path.string() + " for writing");
  out << to_json(report).dump(2) << '\n';
}

MetricReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::Open, "cannot open " + path.string());
  return report_from_json(json::parse(in));
}

void write_records_csv(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::Open, "cannot open " + path.string() + " for writing");
  out << "patch_id,ssim,nrmse\n";
  char buf[64];
  for (const auto& r : report.records) {
    out << r.patch_id;
    std::snprintf(buf, sizeof buf, ",%.17g", r.ssim);
    out << buf;
    std::snprintf(buf, sizeof buf, ",%.17g\n", r.nrmse);
    out << buf;
  }
}

std::vector<PatchRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::Open, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "patch_id,ssim,nrmse") throw IoError(IoError::Kind::CorruptHeader, "unexpected CSV header in " + path.string());
  std::vector<PatchRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    PatchRecord r;
    std::string ssim, nrmse;
    if (!std::getline(row, r.patch_id, ',') || !std::getline(row, ssim, ',') || !std::getline(row, nrmse)) {
      throw IoError(IoError::Kind::TruncatedPayload, "malformed CSV row: " + line);
    }
    r.ssim = std::stod(ssim);
    r.nrmse = std::stod(nrmse);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace bandbridge::metrics

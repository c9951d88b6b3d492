#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace bandbridge::metrics {

struct PatchRecord {
  std::string patch_id;
  double ssim = 0.0;
  double nrmse = 0.0;
  bool operator==(const PatchRecord&) const = default;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  bool operator==(const Summary&) const = default;
};

struct MetricReport {
  std::string method;
  std::vector<PatchRecord> records;  // sorted by patch_id
  Summary ssim;
  Summary nrmse;
  bool operator==(const MetricReport&) const = default;
};

// Order-independent: values are summed in sorted order.
Summary summarize(std::span<const double> values);

// Sorts records by patch id and computes both summaries. Throws DataError
// when empty.
MetricReport aggregate(std::string method, std::vector<PatchRecord> records);

nlohmann::json to_json(const MetricReport& report);
MetricReport report_from_json(const nlohmann::json& doc);

// Empty when `doc` has the MetricReport shape; otherwise one message per problem.
std::vector<std::string> report_schema_errors(const nlohmann::json& doc);

void write_report_json(const MetricReport& report, const std::filesystem::path& path);
MetricReport read_report_json(const std::filesystem::path& path);

// One row per patch: patch_id,ssim,nrmse (values in round-trip precision).
void write_records_csv(const MetricReport& report, const std::filesystem::path& path);
std::vector<PatchRecord> read_records_csv(const std::filesystem::path& path);

}  // namespace bandbridge::metrics

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "factrank/metrics.hpp"

namespace factrank {

struct ReportRow {
  std::string label;
  std::vector<double> values;
  std::optional<double> map_inner;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
};

struct ReportBlock {
  std::string title;
  std::vector<ReportRow> rows;
};

struct Report {
  std::string title;
  std::vector<std::string> columns;
  std::vector<ReportBlock> blocks;
};

ReportRow make_row(std::string label, const MetricRow& metrics);

nlohmann::json report_to_json(const Report& report);
Report report_from_json(const nlohmann::json& obj);

// Aligned plain-text table with three decimals per cell and a centred
// title line per block.
std::string render_table(const Report& report);

// Writes <stem>.json and <stem>.txt. Throws on an empty report or an
// unwritable path.
void emit_report(const std::filesystem::path& dir, const std::string& stem, const Report& report);

// Merges several reports under one title; columns must agree.
Report merge_reports(std::string title, const std::vector<Report>& reports);

}  // namespace factrank

#include "factrank/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "factrank/errors.hpp"
#include "jsonl.hpp"

namespace factrank {

using detail::json;

ReportRow make_row(std::string label, const MetricRow& metrics) {
  return {std::move(label), metrics.values, metrics.map_inner, metrics.evaluated, metrics.excluded};
}

json report_to_json(const Report& report) {
  json blocks = json::array();
  for (const auto& b : report.blocks) {
    json rows = json::array();
    for (const auto& r : b.rows) {
      json metrics = json::object();
      for (std::size_t c = 0; c < report.columns.size() && c < r.values.size(); ++c)
        metrics[report.columns[c]] = r.values[c];
      json row = {{"label", r.label},
                  {"metrics", metrics},
                  {"evaluated_transcripts", r.evaluated},
                  {"excluded_transcripts", r.excluded}};
      row["MAP_inner"] = r.map_inner ? json(*r.map_inner) : json(nullptr);
      rows.push_back(std::move(row));
    }
    blocks.push_back({{"title", b.title}, {"rows", rows}});
  }
  return {{"title", report.title}, {"columns", report.columns}, {"blocks", blocks}};
}

Report report_from_json(const json& obj) {
  Report report;
  try {
    report.title = obj.at("title").get<std::string>();
    report.columns = obj.at("columns").get<std::vector<std::string>>();
    for (const auto& b : obj.at("blocks")) {
      ReportBlock block;
      block.title = b.at("title").get<std::string>();
      for (const auto& r : b.at("rows")) {
        ReportRow row;
        row.label = r.at("label").get<std::string>();
        for (const auto& c : report.columns) row.values.push_back(r.at("metrics").at(c).get<double>());
        if (r.contains("MAP_inner") && !r["MAP_inner"].is_null()) row.map_inner = r["MAP_inner"].get<double>();
        row.evaluated = r.value("evaluated_transcripts", std::size_t{0});
        row.excluded = r.value("excluded_transcripts", std::size_t{0});
        block.rows.push_back(std::move(row));
      }
      report.blocks.push_back(std::move(block));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  return report;
}

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string render_table(const Report& report) {
  const bool any_inner = std::any_of(report.blocks.begin(), report.blocks.end(), [](const ReportBlock& b) {
    return std::any_of(b.rows.begin(), b.rows.end(), [](const ReportRow& r) { return r.map_inner.has_value(); });
  });
  std::vector<std::string> headers = report.columns;
  if (any_inner) headers.emplace_back("MAP_inner");

  std::size_t label_width = std::string("Experiment").size();
  for (const auto& b : report.blocks)
    for (const auto& r : b.rows) label_width = std::max(label_width, r.label.size());
  std::vector<std::size_t> widths;
  for (const auto& h : headers) widths.push_back(std::max<std::size_t>(h.size(), 5));

  std::size_t total = label_width;
  for (auto w : widths) total += 2 + w;

  std::ostringstream out;
  const std::string rule(total, '-');
  if (!report.title.empty()) out << report.title << '\n';
  out << rule << '\n' << pad_right("Experiment", label_width);
  for (std::size_t c = 0; c < headers.size(); ++c) out << "  " << pad_left(headers[c], widths[c]);
  out << '\n';
  for (const auto& b : report.blocks) {
    out << rule << '\n';
    if (!b.title.empty()) {
      const std::size_t left = b.title.size() < total ? (total - b.title.size()) / 2 : 0;
      out << std::string(left, ' ') << b.title << '\n' << rule << '\n';
    }
    for (const auto& r : b.rows) {
      out << pad_right(r.label, label_width);
      for (std::size_t c = 0; c < report.columns.size(); ++c)
        out << "  " << pad_left(c < r.values.size() ? fixed3(r.values[c]) : "-", widths[c]);
      if (any_inner) out << "  " << pad_left(r.map_inner ? fixed3(*r.map_inner) : "-", widths.back());
      out << '\n';
    }
  }
  out << rule << '\n';
  return out.str();
}

void emit_report(const std::filesystem::path& dir, const std::string& stem, const Report& report) {
  const bool empty = report.blocks.empty() ||
                     std::all_of(report.blocks.begin(), report.blocks.end(),
                                 [](const ReportBlock& b) { return b.rows.empty(); });
  if (empty) throw ValidationError("nothing to report");
  {
    detail::AtomicWriter w(dir / (stem + ".json"));
    w.stream() << report_to_json(report).dump(2) << '\n';
    w.commit();
  }
  detail::AtomicWriter w(dir / (stem + ".txt"));
  w.stream() << render_table(report);
  w.commit();
}

Report merge_reports(std::string title, const std::vector<Report>& reports) {
  if (reports.empty()) throw ValidationError("no reports to merge");
  Report out;
  out.title = std::move(title);
  out.columns = reports.front().columns;
  for (const auto& r : reports) {
    if (r.columns != out.columns) throw ValidationError("reports have different column sets");
    out.blocks.insert(out.blocks.end(), r.blocks.begin(), r.blocks.end());
  }
  return out;
}

}  // namespace factrank

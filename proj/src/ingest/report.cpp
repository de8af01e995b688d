#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "fairrank/ingest.hpp"
#include "text.hpp"

namespace fairrank {

namespace {

using nlohmann::json;

json group_json(const GroupExposure& groups) {
  json obj = json::object();
  for (const auto& [g, e] : groups) obj[g] = e;
  return obj;
}

}  // namespace

std::optional<ReportFormat> parse_report_format(std::string_view name) {
  if (name == "table") return ReportFormat::kTable;
  if (name == "machine-readable" || name == "jsonl") {
    return ReportFormat::kMachineReadable;
  }
  if (name == "plot-data") return ReportFormat::kPlotData;
  return std::nullopt;
}

void write_report(std::span<const LeaderboardRow> rows, ReportFormat format,
                  std::ostream& out) {
  std::vector<LeaderboardRow> sorted =
      sort_leaderboard({rows.begin(), rows.end()});
  switch (format) {
    case ReportFormat::kTable:
      out << "run\tEE\n";
      for (const auto& row : sorted) {
        out << fmt::format("{}\t{:.3f}\n", row.run_id, row.mean_ee);
      }
      break;
    case ReportFormat::kMachineReadable:
      for (const auto& row : sorted) {
        json obj = {{"run_id", row.run_id},
                    {"mean_ee", row.mean_ee},
                    {"mean_disparity", row.mean_disparity},
                    {"mean_relevance", row.mean_relevance},
                    {"num_queries", row.num_queries}};
        out << obj.dump() << '\n';
      }
      break;
    case ReportFormat::kPlotData:
      out << "run_id\tdisparity\trelevance\n";
      for (const auto& row : sorted) {
        out << fmt::format("{}\t{:.3f}\t{:.3f}\n", row.run_id,
                           row.mean_disparity, row.mean_relevance);
      }
      break;
  }
}

void write_report(const std::vector<RunMetrics>& runs, ReportFormat format,
                  std::ostream& out) {
  std::vector<LeaderboardRow> rows = leaderboard(runs);
  write_report(std::span<const LeaderboardRow>(rows), format, out);
}

std::vector<LeaderboardRow> read_leaderboard_rows(std::istream& in,
                                                  std::string_view source) {
  std::vector<LeaderboardRow> rows;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (trim(text).empty()) continue;
    auto fail = [&](const std::string& message) {
      return ParseError(std::string(source), line_no, message);
    };
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw fail(fmt::format("invalid JSON: {}", e.what()));
    }
    try {
      LeaderboardRow row;
      row.run_id = obj.at("run_id").get<std::string>();
      row.mean_ee = obj.at("mean_ee").get<double>();
      row.mean_disparity = obj.at("mean_disparity").get<double>();
      row.mean_relevance = obj.at("mean_relevance").get<double>();
      row.num_queries = obj.value("num_queries", std::size_t{0});
      rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw fail(e.what());
    }
  }
  return rows;
}

void write_query_details(const RunMetrics& run, std::ostream& out) {
  for (const auto& q : run.per_query) {
    json obj = {{"run_id", run.run_id},
                {"qid", q.qid},
                {"ee", q.ee},
                {"disparity", q.disparity},
                {"relevance", q.relevance},
                {"num_rankings", q.num_rankings},
                {"system_group_exposure", group_json(q.system_group_exposure)},
                {"target_group_exposure", group_json(q.target_group_exposure)},
                {"unassigned_author_exposure", q.unassigned_author_exposure},
                {"unassigned_target_exposure", q.unassigned_target_exposure}};
    out << obj.dump() << '\n';
  }
}

}  // namespace fairrank

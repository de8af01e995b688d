#include <algorithm>
#include <istream>

#include <fmt/format.h>

#include "fairrank/ingest.hpp"
#include "text.hpp"

namespace fairrank {

namespace {

std::optional<bool> parse_flag(std::string_view text) {
  text = trim(text);
  if (text == "1" || text == "true" || text == "True") return true;
  if (text == "0" || text == "false" || text == "False") return false;
  return std::nullopt;
}

}  // namespace

std::vector<ClickRecord> parse_click_log(std::istream& in,
                                         std::string_view source) {
  CsvReader reader(in, std::string(source));
  std::vector<std::string> row;
  if (!reader.next(row)) return {};
  CsvHeader header(row, std::string(source));
  const std::size_t qid_col = header.require({"qid"});
  const std::size_t doc_col = header.require({"doc_id"});
  const std::size_t position_col = header.require({"position"});
  const std::size_t clicked_col = header.require({"clicked"});
  const std::size_t propensity_col = header.require({"propensity"});
  const std::size_t width =
      std::max({qid_col, doc_col, position_col, clicked_col, propensity_col}) +
      1;

  std::vector<ClickRecord> records;
  while (reader.next(row)) {
    auto fail = [&](const std::string& message) {
      return ParseError(std::string(source), reader.line(), message);
    };
    if (row.size() < width) {
      throw fail(fmt::format("expected at least {} fields, got {}", width,
                             row.size()));
    }
    ClickRecord record;
    record.qid = row[qid_col];
    record.doc_id = row[doc_col];
    auto position = parse_number<std::size_t>(row[position_col]);
    if (!position || *position == 0) {
      throw fail(fmt::format("position '{}' must be a positive integer",
                             row[position_col]));
    }
    record.position = *position;
    auto clicked = parse_flag(row[clicked_col]);
    if (!clicked) {
      throw fail(fmt::format("clicked '{}' must be 0/1 or true/false",
                             row[clicked_col]));
    }
    record.clicked = *clicked;
    auto propensity = parse_number<double>(row[propensity_col]);
    if (!propensity || !(*propensity > 0.0 && *propensity <= 1.0)) {
      throw fail(fmt::format("propensity '{}' must lie in (0,1]",
                             row[propensity_col]));
    }
    record.propensity = *propensity;
    records.push_back(std::move(record));
  }
  return records;
}

std::map<RelevanceKey, RelevanceEstimate> estimate_relevance(
    std::span<const ClickRecord> clicks, double threshold) {
  if (!(threshold >= 0.0)) {
    throw std::invalid_argument(
        fmt::format("relevance threshold must be >= 0, got {}", threshold));
  }
  // Observations are sorted per key before summing so the floating-point
  // result does not depend on record order.
  std::map<RelevanceKey, std::vector<std::pair<double, bool>>> observations;
  for (const auto& click : clicks) {
    if (!(click.propensity > 0.0)) {
      throw std::invalid_argument(fmt::format(
          "query {}, document {}: propensity must be positive", click.qid,
          click.doc_id));
    }
    observations[{click.qid, click.doc_id}].emplace_back(click.propensity,
                                                         click.clicked);
  }

  std::map<RelevanceKey, RelevanceEstimate> estimates;
  for (auto& [key, obs] : observations) {
    std::sort(obs.begin(), obs.end());
    double clicked = 0.0;
    double weight = 0.0;
    for (const auto& [propensity, was_clicked] : obs) {
      double w = 1.0 / propensity;
      weight += w;
      if (was_clicked) clicked += w;
    }
    RelevanceEstimate estimate;
    estimate.score = clicked / weight;
    estimate.relevant = estimate.score >= threshold;
    estimate.impressions = obs.size();
    estimates.emplace(key, estimate);
  }
  return estimates;
}

std::vector<Request> apply_relevance(
    const std::vector<Request>& requests,
    const std::map<RelevanceKey, RelevanceEstimate>& estimates) {
  std::vector<Request> updated;
  updated.reserve(requests.size());
  for (const auto& request : requests) {
    std::vector<DocumentRecord> candidates = request.candidates();
    for (auto& doc : candidates) {
      auto it = estimates.find({request.qid(), doc.doc_id});
      if (it != estimates.end()) doc.relevant = it->second.relevant;
    }
    updated.emplace_back(request.qid(), request.query_text(),
                         std::move(candidates));
  }
  return updated;
}

}  // namespace fairrank

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairrank/core.hpp"
#include "fairrank/metrics.hpp"

namespace fairrank {

// Structured parse failure. line() is 1-based; 0 when the failure is not tied
// to a line (e.g. a missing header).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& message);

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

// ---------------------------------------------------------------------------
// CSV (comma separated, first row header, RFC 4180 quoting).

class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source);

  // Reads the next record. Returns false at end of input. Blank lines are
  // skipped. Throws ParseError on an unterminated quote.
  bool next(std::vector<std::string>& fields);

  // Line on which the last returned record started.
  std::size_t line() const { return record_line_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
  bool first_ = true;
};

// Header lookup tolerant of alternative column names.
class CsvHeader {
 public:
  CsvHeader(std::vector<std::string> names, std::string source);

  // Index of the first present alias; throws ParseError if none is present.
  std::size_t require(std::initializer_list<std::string_view> aliases) const;
  std::optional<std::size_t> find(
      std::initializer_list<std::string_view> aliases) const;

 private:
  std::vector<std::string> names_;
  std::string source_;
};

std::string csv_escape(std::string_view field);

// ---------------------------------------------------------------------------
// Run files: one JSON object per line with keys q_num ("<seq>.<idx>"), qid
// and ranking.

struct RunLine {
  std::string sequence_id;
  std::size_t impression_index = 0;
  QueryId qid;
  Ranking ranking;
};

struct ParsedRunLines {
  std::vector<RunLine> lines;  // file order
  std::vector<std::string> warnings;
};

// Throws ParseError for malformed lines and duplicate (sequence, index)
// pairs. Index gaps and out-of-order indices are warnings; each sequence may
// start at 0 or 1.
ParsedRunLines read_run_lines(std::istream& in, std::string_view source = "run");
void write_run_lines(std::span<const RunLine> lines, std::ostream& out);

// Rankings grouped by qid. Sequences contribute in order of first appearance,
// impressions in index order.
std::map<QueryId, RankingSequence> group_run_lines(
    std::span<const RunLine> lines);

// Canonical line layout for generated runs: sequence id = qid, impressions
// numbered from 0, queries in ascending qid order.
std::vector<RunLine> to_run_lines(
    const std::map<QueryId, RankingSequence>& sequences);

struct RunFile {
  std::string run_id;
  std::map<QueryId, RankingSequence> sequences;
  std::vector<std::string> warnings;
};

RunFile parse_run_file(std::istream& in, std::string run_id);
// run_id is the file name without its extension.
RunFile load_run_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Group definitions: CSV with columns author, gid.

GroupAssignment parse_group_file(std::istream& in,
                                 std::string_view source = "groups");
void write_group_file(const GroupAssignment& groups, std::ostream& out);

// ---------------------------------------------------------------------------
// Paper and author metadata.

struct PaperInfo {
  DocId id;
  std::string title;
  std::optional<long long> year;
  std::string venue;
  std::optional<long long> citations;
  std::vector<AuthorId> authors;  // ordered by position
};

struct AuthorInfo {
  AuthorId id;
  std::string name;
  std::optional<long long> citation_count;
  std::optional<long long> paper_count;
  std::optional<double> h_index;
};

struct Catalog {
  std::map<DocId, PaperInfo> papers;
  std::map<AuthorId, AuthorInfo> authors;
  std::vector<std::string> warnings;

  // nullptr for papers with no metadata and no authorship rows.
  const std::vector<AuthorId>* authors_of(const DocId& doc) const;
};

// Columns (first matching alias wins):
//   paper_metadata:     paper_sha|paper_id|id, title, year, venue,
//                       n_citations|num_citations|citations
//   author_metadata:    corpus_author_id|author_id|id, name,
//                       num_citations|citation_count|n_citations,
//                       num_papers|paper_count, h_index|hindex
//   authors_for_papers: paper_sha|paper_id, corpus_author_id|author_id,
//                       position
// Only the id columns (and position) are required.
Catalog parse_metadata(std::istream& paper_metadata,
                       std::istream& author_metadata,
                       std::istream& authors_for_papers);
Catalog load_metadata(const std::filesystem::path& paper_metadata,
                      const std::filesystem::path& author_metadata,
                      const std::filesystem::path& authors_for_papers);

// ---------------------------------------------------------------------------
// Queries file: one JSON object per line,
//   {"qid": "...", "query": "...",
//    "documents": [{"doc_id": "...", "relevance": 0|1, "authors": [...]}]}
// "authors" is optional; when absent the author list comes from the catalog.

struct ParsedQueries {
  std::vector<Request> requests;  // file order
  std::vector<std::string> warnings;
};

ParsedQueries parse_queries_file(std::istream& in,
                                 const Catalog* catalog = nullptr,
                                 std::string_view source = "queries");
void write_queries_file(std::span<const Request> requests, std::ostream& out);

// Keeps requests with at least two relevant candidates and at most four
// whitespace-delimited query tokens.
std::vector<Request> filter_queries(const std::vector<Request>& requests);

// ---------------------------------------------------------------------------
// Click logs: CSV with columns qid, doc_id, position, clicked, propensity.

struct ClickRecord {
  QueryId qid;
  DocId doc_id;
  std::size_t position = 1;
  bool clicked = false;
  double propensity = 1.0;
};

std::vector<ClickRecord> parse_click_log(std::istream& in,
                                         std::string_view source = "clicks");

struct RelevanceEstimate {
  double score = 0.0;
  bool relevant = false;
  std::size_t impressions = 0;
};

using RelevanceKey = std::pair<QueryId, DocId>;

// Inverse-propensity-weighted click rate per (qid, doc):
//   score = sum(clicked / propensity) / sum(1 / propensity)
// relevant iff score >= threshold. Throws std::invalid_argument for a
// negative threshold or a non-positive propensity. Independent of record
// order.
std::map<RelevanceKey, RelevanceEstimate> estimate_relevance(
    std::span<const ClickRecord> clicks, double threshold);

// Replaces candidate relevance with estimated labels where an estimate
// exists; other candidates keep their current label.
std::vector<Request> apply_relevance(
    const std::vector<Request>& requests,
    const std::map<RelevanceKey, RelevanceEstimate>& estimates);

// ---------------------------------------------------------------------------
// Reports.

enum class ReportFormat { kTable, kMachineReadable, kPlotData };

std::optional<ReportFormat> parse_report_format(std::string_view name);

// Rows are sorted ascending by mean EE before writing.
//   table:            "run\tEE" then one row per run, 3 decimals
//   machine-readable: one JSON object per run, full precision
//   plot-data:        "run_id\tdisparity\trelevance", 3 decimals
void write_report(std::span<const LeaderboardRow> rows, ReportFormat format,
                  std::ostream& out);
void write_report(const std::vector<RunMetrics>& runs, ReportFormat format,
                  std::ostream& out);

// Reads rows written in the machine-readable format.
std::vector<LeaderboardRow> read_leaderboard_rows(
    std::istream& in, std::string_view source = "metrics");

// One JSON object per query with every QueryMetrics field.
void write_query_details(const RunMetrics& run, std::ostream& out);

}  // namespace fairrank

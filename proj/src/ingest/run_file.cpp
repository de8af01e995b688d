#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "fairrank/ingest.hpp"
#include "text.hpp"

namespace fairrank {

namespace {

using nlohmann::json;

RunLine parse_run_line(const std::string& text, std::string_view source,
                       std::size_t line_no) {
  auto fail = [&](const std::string& message) -> ParseError {
    return ParseError(std::string(source), line_no, message);
  };
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw fail(fmt::format("invalid JSON: {}", e.what()));
  }
  if (!obj.is_object()) throw fail("expected a JSON object");
  for (const char* key : {"q_num", "qid", "ranking"}) {
    if (!obj.contains(key)) throw fail(fmt::format("missing key '{}'", key));
  }

  RunLine line;
  const json& q_num = obj["q_num"];
  if (!q_num.is_string()) throw fail("'q_num' must be a string");
  std::string q = q_num.get<std::string>();
  auto dot = q.rfind('.');
  if (dot == std::string::npos || dot == 0) {
    throw fail(fmt::format("'q_num' \"{}\" is not <sequence>.<index>", q));
  }
  std::string_view index_text = std::string_view(q).substr(dot + 1);
  bool digits = !index_text.empty() &&
                std::all_of(index_text.begin(), index_text.end(),
                            [](char c) { return c >= '0' && c <= '9'; });
  auto index = digits ? parse_number<std::size_t>(index_text) : std::nullopt;
  if (!index) {
    throw fail(fmt::format("'q_num' \"{}\" has a non-numeric index", q));
  }
  line.sequence_id = q.substr(0, dot);
  line.impression_index = *index;

  auto qid = json_identifier(obj["qid"]);
  if (!qid) throw fail("'qid' must be a string or integer");
  line.qid = std::move(*qid);

  const json& ranking = obj["ranking"];
  if (!ranking.is_array()) throw fail("'ranking' must be an array");
  line.ranking.items.reserve(ranking.size());
  for (const auto& doc : ranking) {
    if (!doc.is_string()) throw fail("'ranking' entries must be strings");
    line.ranking.items.push_back(doc.get<std::string>());
  }
  return line;
}

}  // namespace

ParsedRunLines read_run_lines(std::istream& in, std::string_view source) {
  ParsedRunLines parsed;
  struct SequenceState {
    std::set<std::size_t> indices;
    std::size_t last = 0;
  };
  std::map<std::string, SequenceState> sequences;
  std::vector<std::string> order;  // sequence ids by first appearance

  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (trim(text).empty()) continue;
    RunLine line = parse_run_line(text, source, line_no);
    auto [it, fresh] = sequences.try_emplace(line.sequence_id);
    SequenceState& state = it->second;
    if (fresh) order.push_back(line.sequence_id);
    if (!state.indices.insert(line.impression_index).second) {
      throw ParseError(std::string(source), line_no,
                       fmt::format("duplicate impression {}.{}",
                                   line.sequence_id, line.impression_index));
    }
    if (!fresh && line.impression_index < state.last) {
      parsed.warnings.push_back(fmt::format(
          "{}:{}: impression {}.{} out of order", source, line_no,
          line.sequence_id, line.impression_index));
    }
    state.last = std::max(state.last, line.impression_index);
    parsed.lines.push_back(std::move(line));
  }

  for (const auto& id : order) {
    const auto& indices = sequences[id].indices;
    std::size_t base = *indices.begin();
    if (base > 1) {
      parsed.warnings.push_back(fmt::format(
          "{}: sequence {} starts at impression {}", source, id, base));
    }
    if (*indices.rbegin() - base + 1 != indices.size()) {
      parsed.warnings.push_back(fmt::format(
          "{}: sequence {} has non-contiguous impression indices", source, id));
    }
  }
  return parsed;
}

void write_run_lines(std::span<const RunLine> lines, std::ostream& out) {
  for (const auto& line : lines) {
    json obj;
    obj["q_num"] = fmt::format("{}.{}", line.sequence_id, line.impression_index);
    obj["qid"] = line.qid;
    obj["ranking"] = line.ranking.items;
    out << obj.dump() << '\n';
  }
}

std::map<QueryId, RankingSequence> group_run_lines(
    std::span<const RunLine> lines) {
  std::map<std::string, std::size_t> first_seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    first_seen.try_emplace(lines[i].sequence_id, i);
  }
  std::vector<const RunLine*> sorted;
  sorted.reserve(lines.size());
  for (const auto& line : lines) sorted.push_back(&line);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [&](const RunLine* a, const RunLine* b) {
                     std::size_t fa = first_seen[a->sequence_id];
                     std::size_t fb = first_seen[b->sequence_id];
                     if (fa != fb) return fa < fb;
                     return a->impression_index < b->impression_index;
                   });
  std::map<QueryId, RankingSequence> grouped;
  for (const RunLine* line : sorted) {
    RankingSequence& seq = grouped[line->qid];
    seq.qid = line->qid;
    seq.rankings.push_back(line->ranking);
  }
  return grouped;
}

std::vector<RunLine> to_run_lines(
    const std::map<QueryId, RankingSequence>& sequences) {
  std::vector<RunLine> lines;
  for (const auto& [qid, seq] : sequences) {
    for (std::size_t i = 0; i < seq.rankings.size(); ++i) {
      lines.push_back({qid, i, qid, seq.rankings[i]});
    }
  }
  return lines;
}

RunFile parse_run_file(std::istream& in, std::string run_id) {
  ParsedRunLines parsed = read_run_lines(in, run_id);
  RunFile run;
  run.run_id = std::move(run_id);
  run.sequences = group_run_lines(parsed.lines);
  run.warnings = std::move(parsed.warnings);
  return run;
}

RunFile load_run_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError(path.string(), 0, "cannot open run file");
  }
  RunFile run = parse_run_file(in, path.stem().string());
  return run;
}

GroupAssignment parse_group_file(std::istream& in, std::string_view source) {
  CsvReader reader(in, std::string(source));
  std::vector<std::string> row;
  if (!reader.next(row)) {
    throw ParseError(std::string(source), 0, "missing header row");
  }
  CsvHeader header(row, std::string(source));
  const std::size_t author_col = header.require({"author"});
  const std::size_t group_col = header.require({"gid"});

  GroupAssignment groups;
  while (reader.next(row)) {
    std::size_t needed = std::max(author_col, group_col) + 1;
    if (row.size() < needed) {
      throw ParseError(std::string(source), reader.line(),
                       fmt::format("expected at least {} fields, got {}",
                                   needed, row.size()));
    }
    if (row[author_col].empty()) {
      throw ParseError(std::string(source), reader.line(), "empty author id");
    }
    try {
      groups.assign(row[author_col], row[group_col]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string(source), reader.line(), e.what());
    }
  }
  return groups;
}

void write_group_file(const GroupAssignment& groups, std::ostream& out) {
  out << "author,gid\n";
  for (const auto& [author, gid] : groups.entries()) {
    out << csv_escape(author) << ',' << csv_escape(gid) << '\n';
  }
}

}  // namespace fairrank

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "fairrank/ingest.hpp"
#include "text.hpp"

namespace fairrank {

namespace {

using nlohmann::json;

constexpr std::size_t kMinRelevant = 2;
constexpr std::size_t kMaxQueryTokens = 4;

std::size_t count_tokens(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::size_t n = 0;
  for (std::string token; in >> token;) ++n;
  return n;
}

}  // namespace

ParsedQueries parse_queries_file(std::istream& in, const Catalog* catalog,
                                 std::string_view source) {
  ParsedQueries parsed;
  std::set<QueryId> seen;
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
    if (!obj.is_object()) throw fail("expected a JSON object");
    if (!obj.contains("qid")) throw fail("missing key 'qid'");
    if (!obj.contains("documents")) throw fail("missing key 'documents'");
    auto qid = json_identifier(obj["qid"]);
    if (!qid) throw fail("'qid' must be a string or integer");
    if (!seen.insert(*qid).second) {
      throw fail(fmt::format("duplicate qid {}", *qid));
    }
    std::string query_text;
    if (obj.contains("query")) {
      if (!obj["query"].is_string()) throw fail("'query' must be a string");
      query_text = obj["query"].get<std::string>();
    }

    const json& docs = obj["documents"];
    if (!docs.is_array()) throw fail("'documents' must be an array");
    std::vector<DocumentRecord> candidates;
    candidates.reserve(docs.size());
    for (const auto& doc : docs) {
      if (!doc.is_object()) throw fail("document entries must be objects");
      if (!doc.contains("doc_id")) throw fail("document missing 'doc_id'");
      auto id = json_identifier(doc["doc_id"]);
      if (!id) throw fail("'doc_id' must be a string or integer");
      DocumentRecord record;
      record.doc_id = std::move(*id);

      if (!doc.contains("relevance")) {
        throw fail(fmt::format("document {} missing 'relevance'",
                               record.doc_id));
      }
      const json& rel = doc["relevance"];
      if (!rel.is_number_integer() ||
          (rel.get<long long>() != 0 && rel.get<long long>() != 1)) {
        throw fail(fmt::format("document {}: relevance must be 0 or 1, got {}",
                               record.doc_id, rel.dump()));
      }
      record.relevant = rel.get<long long>() == 1;

      if (doc.contains("authors")) {
        const json& authors = doc["authors"];
        if (!authors.is_array()) throw fail("'authors' must be an array");
        for (const auto& a : authors) {
          auto author = json_identifier(a);
          if (!author) throw fail("author ids must be strings or integers");
          record.authors.push_back(std::move(*author));
        }
      } else if (const auto* known =
                     catalog ? catalog->authors_of(record.doc_id) : nullptr) {
        record.authors = *known;
      } else {
        parsed.warnings.push_back(fmt::format(
            "{}:{}: document {} has no author metadata", source, line_no,
            record.doc_id));
      }
      candidates.push_back(std::move(record));
    }
    try {
      parsed.requests.emplace_back(*qid, std::move(query_text),
                                   std::move(candidates));
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
  }
  return parsed;
}

void write_queries_file(std::span<const Request> requests, std::ostream& out) {
  for (const auto& request : requests) {
    json docs = json::array();
    for (const auto& doc : request.candidates()) {
      docs.push_back({{"doc_id", doc.doc_id},
                      {"relevance", doc.relevant ? 1 : 0},
                      {"authors", doc.authors}});
    }
    json obj = {{"qid", request.qid()},
                {"query", request.query_text()},
                {"documents", std::move(docs)}};
    out << obj.dump() << '\n';
  }
}

std::vector<Request> filter_queries(const std::vector<Request>& requests) {
  std::vector<Request> kept;
  for (const auto& request : requests) {
    if (request.num_relevant() >= kMinRelevant &&
        count_tokens(request.query_text()) <= kMaxQueryTokens) {
      kept.push_back(request);
    }
  }
  return kept;
}

}  // namespace fairrank

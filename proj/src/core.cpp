#include "fairrank/core.hpp"

#include <algorithm>
#include <unordered_set>

#include <fmt/format.h>

namespace fairrank {

namespace {
bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }
}  // namespace

void EvalConfig::validate() const {
  if (!is_probability(gamma)) {
    throw ConfigError(fmt::format("gamma must lie in [0,1], got {}", gamma));
  }
  if (!is_probability(stop_prob_relevant)) {
    throw ConfigError(fmt::format(
        "stop probability for relevant documents must lie in [0,1], got {}",
        stop_prob_relevant));
  }
  if (!is_probability(stop_prob_nonrelevant)) {
    throw ConfigError(fmt::format(
        "stop probability for non-relevant documents must lie in [0,1], got {}",
        stop_prob_nonrelevant));
  }
  if (stop_prob_nonrelevant > stop_prob_relevant) {
    throw ConfigError(fmt::format(
        "stop probabilities must be monotone in relevance: non-relevant {} > "
        "relevant {}",
        stop_prob_nonrelevant, stop_prob_relevant));
  }
}

Request::Request(QueryId qid, std::string query_text,
                 std::vector<DocumentRecord> candidates)
    : qid_(std::move(qid)),
      query_text_(std::move(query_text)),
      candidates_(std::move(candidates)) {
  index_.reserve(candidates_.size());
  for (std::size_t i = 0; i < candidates_.size(); ++i) {
    // An author listed twice on one paper is still a single indicator hit.
    auto& authors = candidates_[i].authors;
    std::unordered_set<AuthorId> distinct;
    std::erase_if(authors, [&](const AuthorId& a) {
      return !distinct.insert(a).second;
    });
    if (!index_.emplace(candidates_[i].doc_id, i).second) {
      throw std::invalid_argument(
          fmt::format("query {}: duplicate candidate document {}", qid_,
                      candidates_[i].doc_id));
    }
  }
}

std::size_t Request::num_relevant() const {
  return static_cast<std::size_t>(
      std::count_if(candidates_.begin(), candidates_.end(),
                    [](const DocumentRecord& d) { return d.relevant; }));
}

const DocumentRecord* Request::find(const DocId& doc_id) const {
  auto it = index_.find(doc_id);
  return it == index_.end() ? nullptr : &candidates_[it->second];
}

void GroupAssignment::assign(const AuthorId& author, const GroupId& group) {
  auto [it, inserted] = groups_.emplace(author, group);
  if (!inserted && it->second != group) {
    throw std::invalid_argument(
        fmt::format("author {} assigned to conflicting groups {} and {}",
                    author, it->second, group));
  }
}

const GroupId* GroupAssignment::find(const AuthorId& author) const {
  auto it = groups_.find(author);
  return it == groups_.end() ? nullptr : &it->second;
}

bool ValidationReport::has_violations() const { return num_violations() > 0; }

std::size_t ValidationReport::num_violations() const {
  return static_cast<std::size_t>(
      std::count_if(issues.begin(), issues.end(), [](const auto& i) {
        return i.severity == Severity::kViolation;
      }));
}

std::size_t ValidationReport::num_warnings() const {
  return issues.size() - num_violations();
}

std::string ValidationReport::first_violation() const {
  for (const auto& issue : issues) {
    if (issue.severity == Severity::kViolation) return issue.message;
  }
  return {};
}

ValidationReport validate_request_run(const Request& request,
                                      const RankingSequence& seq,
                                      const EvalConfig& config) {
  ValidationReport report;
  if (seq.rankings.empty()) {
    report.issues.push_back(
        {Severity::kViolation, IssueKind::kEmptySequence, 0, 0, {},
         fmt::format("query {}: empty ranking sequence", request.qid())});
    return report;
  }
  std::unordered_set<DocId> seen;
  for (std::size_t r = 0; r < seq.rankings.size(); ++r) {
    const auto& items = seq.rankings[r].items;
    seen.clear();
    for (std::size_t i = 0; i < items.size(); ++i) {
      const DocId& doc = items[i];
      if (!seen.insert(doc).second) {
        report.issues.push_back(
            {Severity::kViolation, IssueKind::kDuplicateDocument, r, i + 1, doc,
             fmt::format("query {}, ranking {}: duplicate document {} at "
                         "position {}",
                         request.qid(), r, doc, i + 1)});
      }
      if (!request.contains(doc)) {
        Severity severity = config.strict_candidates ? Severity::kViolation
                                                     : Severity::kWarning;
        report.issues.push_back(
            {severity, IssueKind::kUnknownDocument, r, i + 1, doc,
             fmt::format("query {}, ranking {}: unknown document {} at "
                         "position {}",
                         request.qid(), r, doc, i + 1)});
      }
    }
  }
  return report;
}

std::map<AuthorId, std::set<DocId>> author_documents(const Request& request) {
  std::map<AuthorId, std::set<DocId>> result;
  for (const auto& doc : request.candidates()) {
    for (const auto& author : doc.authors) result[author].insert(doc.doc_id);
  }
  return result;
}

}  // namespace fairrank

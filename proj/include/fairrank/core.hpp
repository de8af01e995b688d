#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace fairrank {

using DocId = std::string;
using AuthorId = std::string;
using GroupId = std::string;
using QueryId = std::string;

// Raised for malformed configurations (out-of-range probabilities).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a ranking cannot be evaluated against its request.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Browsing-model parameters.
//
// The stop probabilities are the two values of the relevance-to-satisfaction
// transform over binary grades. Only gamma has a published value (0.5); the
// stop probabilities are configuration defaults and can be overridden from
// every entry point.
struct EvalConfig {
  double gamma = 0.5;
  double stop_prob_relevant = 0.7;
  double stop_prob_nonrelevant = 0.0;
  bool strict_candidates = false;

  // Throws ConfigError unless 0 <= gamma <= 1 and
  // 0 <= stop_prob_nonrelevant <= stop_prob_relevant <= 1.
  void validate() const;

  double stop_probability(bool relevant) const {
    return relevant ? stop_prob_relevant : stop_prob_nonrelevant;
  }
};

struct DocumentRecord {
  DocId doc_id;
  std::vector<AuthorId> authors;  // may be empty
  bool relevant = false;
};

// A query with its candidate set. Immutable after construction; doc_ids are
// unique (the constructor throws std::invalid_argument otherwise) and repeated
// authors within one document are collapsed.
class Request {
 public:
  Request() = default;
  Request(QueryId qid, std::string query_text,
          std::vector<DocumentRecord> candidates);

  const QueryId& qid() const { return qid_; }
  const std::string& query_text() const { return query_text_; }
  const std::vector<DocumentRecord>& candidates() const { return candidates_; }
  std::size_t size() const { return candidates_.size(); }
  std::size_t num_relevant() const;

  // nullptr when doc_id is not a candidate.
  const DocumentRecord* find(const DocId& doc_id) const;
  bool contains(const DocId& doc_id) const { return find(doc_id) != nullptr; }

 private:
  QueryId qid_;
  std::string query_text_;
  std::vector<DocumentRecord> candidates_;
  std::unordered_map<DocId, std::size_t> index_;
};

struct Ranking {
  std::vector<DocId> items;

  bool operator==(const Ranking&) const = default;
};

struct RankingSequence {
  QueryId qid;
  std::vector<Ranking> rankings;
};

// author -> group. Each author maps to exactly one group; authors missing from
// the map are unassigned.
class GroupAssignment {
 public:
  // Throws std::invalid_argument if the author already has a different group.
  // Re-assigning the same group is a no-op.
  void assign(const AuthorId& author, const GroupId& group);

  // nullptr when the author is unassigned.
  const GroupId* find(const AuthorId& author) const;

  std::size_t size() const { return groups_.size(); }
  bool empty() const { return groups_.empty(); }
  const std::map<AuthorId, GroupId>& entries() const { return groups_; }

 private:
  std::map<AuthorId, GroupId> groups_;
};

// author -> accumulated exposure. Absent key means zero.
using ExposureVector = std::map<AuthorId, double>;

// group -> summed exposure.
using GroupExposure = std::map<GroupId, double>;

enum class Severity { kWarning, kViolation };

enum class IssueKind { kDuplicateDocument, kUnknownDocument, kEmptySequence };

struct ValidationIssue {
  Severity severity;
  IssueKind kind;
  std::size_t ranking_index;  // 0-based impression within the sequence
  std::size_t position;       // 1-based rank position, 0 when not applicable
  DocId doc_id;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool has_violations() const;
  std::size_t num_violations() const;
  std::size_t num_warnings() const;
  // Message of the first violation, or empty.
  std::string first_violation() const;
};

// Checks every ranking of seq against request.candidates. Duplicates are
// always violations; out-of-candidate documents are violations in strict mode
// and warnings otherwise. An empty sequence is a violation.
ValidationReport validate_request_run(const Request& request,
                                      const RankingSequence& seq,
                                      const EvalConfig& config);

// author -> documents that list the author. Authors with no documents are
// absent.
std::map<AuthorId, std::set<DocId>> author_documents(const Request& request);

}  // namespace fairrank

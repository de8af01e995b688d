#include "fairrank/policies.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include <fmt/format.h>

#include "fairrank/exposure.hpp"

namespace fairrank {

namespace {

constexpr std::array<std::pair<PolicyKind, std::string_view>, 4> kPolicyNames{{
    {PolicyKind::kDeterministicRelevance, "deterministic-relevance"},
    {PolicyKind::kUniformRandom, "uniform-random"},
    {PolicyKind::kIdealSampler, "ideal-sampler"},
    {PolicyKind::kGreedyBalancer, "greedy-balancer"},
}};

std::vector<DocId> candidate_ids(const Request& request, bool relevant) {
  std::vector<DocId> ids;
  for (const auto& doc : request.candidates()) {
    if (doc.relevant == relevant) ids.push_back(doc.doc_id);
  }
  return ids;
}

Ranking deterministic_rank(const Request& request) {
  Ranking ranking;
  for (bool relevant : {true, false}) {
    std::vector<DocId> ids = candidate_ids(request, relevant);
    std::sort(ids.begin(), ids.end());
    ranking.items.insert(ranking.items.end(), ids.begin(), ids.end());
  }
  return ranking;
}

// Documents ordered relevance-major, then by descending deficit (the summed
// target-so-far minus delivered exposure of their authors), then by doc_id.
Ranking deficit_rank(const Request& request, std::size_t impressions,
                     const std::map<AuthorId, double>& unit_target,
                     const std::map<AuthorId, double>& delivered) {
  struct Entry {
    bool relevant;
    double deficit;
    const DocId* id;
  };
  std::vector<Entry> entries;
  entries.reserve(request.size());
  const double k = static_cast<double>(impressions);
  for (const auto& doc : request.candidates()) {
    double deficit = 0.0;
    for (const auto& author : doc.authors) {
      auto t = unit_target.find(author);
      auto d = delivered.find(author);
      deficit += (t == unit_target.end() ? 0.0 : k * t->second) -
                 (d == delivered.end() ? 0.0 : d->second);
    }
    entries.push_back({doc.relevant, deficit, &doc.doc_id});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.relevant != b.relevant) return a.relevant;
    if (a.deficit != b.deficit) return a.deficit > b.deficit;
    return *a.id < *b.id;
  });
  Ranking ranking;
  ranking.items.reserve(entries.size());
  for (const auto& e : entries) ranking.items.push_back(*e.id);
  return ranking;
}

std::map<AuthorId, double> unit_target_of(const Request& request,
                                          const EvalConfig& config) {
  if (request.candidates().empty()) return {};
  return target_exposure(request, 1, config);
}

}  // namespace

std::string_view policy_name(PolicyKind kind) {
  for (const auto& [k, name] : kPolicyNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<PolicyKind> parse_policy_kind(std::string_view name) {
  for (const auto& [kind, n] : kPolicyNames) {
    if (n == name) return kind;
  }
  return std::nullopt;
}

const std::vector<PolicyKind>& all_policy_kinds() {
  static const std::vector<PolicyKind> kinds = [] {
    std::vector<PolicyKind> v;
    for (const auto& [kind, name] : kPolicyNames) v.push_back(kind);
    return v;
  }();
  return kinds;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::string_view qid)
    : engine_(splitmix64(seed ^ fnv1a64(qid))) {}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below: zero bound");
  // Values below `threshold` would bias the modulo.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

Policy::Policy(PolicySpec spec, const Request& request,
               const EvalConfig& config)
    : spec_(spec), request_(&request), config_(config),
      rng_(spec.seed, request.qid()) {
  if (spec_.kind == PolicyKind::kGreedyBalancer) {
    unit_target_ = unit_target_of(request, config_);
  }
}

Ranking Policy::next() {
  Ranking ranking;
  switch (spec_.kind) {
    case PolicyKind::kDeterministicRelevance:
      ranking = deterministic_rank(*request_);
      break;
    case PolicyKind::kUniformRandom: {
      for (const auto& doc : request_->candidates()) {
        ranking.items.push_back(doc.doc_id);
      }
      rng_.shuffle(ranking.items);
      break;
    }
    case PolicyKind::kIdealSampler: {
      std::vector<DocId> relevant = candidate_ids(*request_, true);
      std::vector<DocId> rest = candidate_ids(*request_, false);
      rng_.shuffle(relevant);
      rng_.shuffle(rest);
      ranking.items = std::move(relevant);
      ranking.items.insert(ranking.items.end(), rest.begin(), rest.end());
      break;
    }
    case PolicyKind::kGreedyBalancer:
      ranking = greedy_rank();
      break;
  }
  record(ranking);
  return ranking;
}

Ranking Policy::greedy_rank() const {
  return deficit_rank(*request_, impressions_, unit_target_, delivered_);
}

void Policy::record(const Ranking& ranking) {
  ++impressions_;
  if (spec_.kind != PolicyKind::kGreedyBalancer) return;
  for (const auto& [author, e] : ranking_exposure(ranking, *request_, config_)) {
    delivered_[author] += e;
  }
}

Ranking policy_rank(const PolicySpec& policy, const Request& request,
                    std::span<const Ranking> history,
                    const EvalConfig& config) {
  switch (policy.kind) {
    case PolicyKind::kDeterministicRelevance:
      return deterministic_rank(request);
    case PolicyKind::kGreedyBalancer: {
      std::map<AuthorId, double> delivered;
      for (const auto& ranking : history) {
        for (const auto& [author, e] : ranking_exposure(ranking, request, config)) {
          delivered[author] += e;
        }
      }
      return deficit_rank(request, history.size(),
                          unit_target_of(request, config), delivered);
    }
    case PolicyKind::kUniformRandom:
    case PolicyKind::kIdealSampler:
      break;
  }
  // Random policies: replay the stream up to this impression.
  Policy replay(policy, request, config);
  for (std::size_t i = 0; i < history.size(); ++i) replay.next();
  return replay.next();
}

std::map<QueryId, RankingSequence> run_protocol(
    const std::vector<Request>& requests, std::size_t impressions_per_query,
    const PolicySpec& policy, const EvalConfig& config) {
  if (impressions_per_query == 0) {
    throw std::invalid_argument("impressions per query must be at least 1");
  }
  std::map<QueryId, RankingSequence> result;
  for (const auto& request : requests) {
    RankingSequence& seq = result[request.qid()];
    if (!seq.rankings.empty()) {
      throw std::invalid_argument(
          fmt::format("duplicate query {} in protocol input", request.qid()));
    }
    seq.qid = request.qid();
    seq.rankings.reserve(impressions_per_query);
    Policy instance(policy, request, config);
    for (std::size_t i = 0; i < impressions_per_query; ++i) {
      seq.rankings.push_back(instance.next());
    }
  }
  return result;
}

bool is_monotone_degrading(const Ranking& ranking, const Request& request) {
  bool seen_nonrelevant = false;
  for (const auto& id : ranking.items) {
    const DocumentRecord* doc = request.find(id);
    bool relevant = doc != nullptr && doc->relevant;
    if (relevant && seen_nonrelevant) return false;
    if (!relevant) seen_nonrelevant = true;
  }
  return true;
}

}  // namespace fairrank

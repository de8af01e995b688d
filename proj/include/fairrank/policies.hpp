#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairrank/core.hpp"

namespace fairrank {

enum class PolicyKind {
  kDeterministicRelevance,
  kUniformRandom,
  kIdealSampler,
  kGreedyBalancer,
};

// Canonical names: deterministic-relevance, uniform-random, ideal-sampler,
// greedy-balancer.
std::string_view policy_name(PolicyKind kind);
std::optional<PolicyKind> parse_policy_kind(std::string_view name);
const std::vector<PolicyKind>& all_policy_kinds();

struct PolicySpec {
  PolicyKind kind = PolicyKind::kDeterministicRelevance;
  std::uint64_t seed = 0;
};

// Portable random source.
//
// Algorithm: std::mt19937_64 (fully specified by the C++ standard) seeded with
// splitmix64(seed XOR fnv1a64(qid)). Bounded integers use rejection sampling
// on the raw 64-bit output and shuffles are Fisher-Yates from the last index
// down, so the stream of rankings is identical on every conforming platform.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view qid);

  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t x);

// One ranking policy instance serves one query sequence. Stateful policies
// (the greedy balancer) keep running exposure totals between calls.
class Policy {
 public:
  Policy(PolicySpec spec, const Request& request, const EvalConfig& config);

  // Next ranking of the sequence; always a full permutation of candidates.
  Ranking next();

  std::size_t impressions() const { return impressions_; }

 private:
  Ranking greedy_rank() const;
  void record(const Ranking& ranking);

  PolicySpec spec_;
  const Request* request_;
  EvalConfig config_;
  Rng rng_;
  std::size_t impressions_ = 0;
  // Greedy balancer state.
  std::map<AuthorId, double> delivered_;
  std::map<AuthorId, double> unit_target_;
};

// Stateless form of the policy step: the ranking the policy emits after the
// given history. The random draw depends on (seed, qid, history length) so
// a replay of the same history reproduces Policy::next.
Ranking policy_rank(const PolicySpec& policy, const Request& request,
                    std::span<const Ranking> history, const EvalConfig& config);

// Runs the evaluation protocol: asks the policy for impressions_per_query
// rankings of every request. Throws std::invalid_argument when
// impressions_per_query is zero.
std::map<QueryId, RankingSequence> run_protocol(
    const std::vector<Request>& requests, std::size_t impressions_per_query,
    const PolicySpec& policy, const EvalConfig& config);

// True when no non-relevant document precedes a relevant one.
bool is_monotone_degrading(const Ranking& ranking, const Request& request);

}  // namespace fairrank

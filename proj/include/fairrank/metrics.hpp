#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "fairrank/core.hpp"

namespace fairrank {

struct GroupExposureResult {
  GroupExposure groups;
  // Exposure of authors with no group; excluded from every group sum.
  double unassigned = 0.0;
};

GroupExposureResult group_exposure(const ExposureVector& exposure,
                                   const GroupAssignment& groups);

// Euclidean distance between system and target group exposure over the union
// of their keys (absent groups count as zero).
double ee_metric(const GroupExposure& system, const GroupExposure& target);

struct Decomposition {
  double disparity = 0.0;  // sum of squared system group exposure
  double relevance = 0.0;  // inner product of system and target
};

// ee^2 = disparity - 2 * relevance + sum(target^2).
Decomposition decompose(const GroupExposure& system,
                        const GroupExposure& target);

struct QueryMetrics {
  QueryId qid;
  double ee = 0.0;
  double disparity = 0.0;
  double relevance = 0.0;
  GroupExposure system_group_exposure;
  GroupExposure target_group_exposure;
  double unassigned_author_exposure = 0.0;
  double unassigned_target_exposure = 0.0;
  std::size_t num_rankings = 0;
  std::vector<std::string> warnings;
};

// Evaluates one query sequence against the target computed for the same
// number of impressions. Throws EvaluationError when validation reports a
// violation (duplicates always; unknown documents in strict mode).
QueryMetrics evaluate_query(const Request& request, const RankingSequence& seq,
                            const GroupAssignment& groups,
                            const EvalConfig& config);

struct RunMetrics {
  std::string run_id;
  std::vector<QueryMetrics> per_query;  // ascending qid
  double mean_ee = 0.0;
  double mean_disparity = 0.0;
  double mean_relevance = 0.0;
  std::vector<std::string> warnings;
};

// Evaluates every request that has a sequence in `runs`. Mismatched qids
// (a request without a sequence, or a sequence without a request) throw
// EvaluationError in strict mode and become warnings otherwise. `jobs` > 1
// spreads queries over worker threads; the result does not depend on it.
RunMetrics evaluate_run(const std::string& run_id,
                        const std::vector<Request>& requests,
                        const std::map<QueryId, RankingSequence>& runs,
                        const GroupAssignment& groups, const EvalConfig& config,
                        std::size_t jobs = 1);

struct LeaderboardRow {
  std::string run_id;
  double mean_ee = 0.0;
  double mean_disparity = 0.0;
  double mean_relevance = 0.0;
  std::size_t num_queries = 0;
};

// Ascending mean_ee, ties broken by run_id.
std::vector<LeaderboardRow> leaderboard(const std::vector<RunMetrics>& runs);
std::vector<LeaderboardRow> sort_leaderboard(std::vector<LeaderboardRow> rows);

}  // namespace fairrank

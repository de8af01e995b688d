#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "fairrank/core.hpp"

namespace fairrank {

// Probability that the user reaches each rank position under the ERR
// browsing model: w_1 = 1, w_i = gamma^(i-1) * prod_{j<i} (1 - p_stop(pi_j)).
using PositionWeights = std::vector<double>;

// Documents outside the candidate set throw EvaluationError in strict mode;
// otherwise they are treated as non-relevant and authorless.
PositionWeights position_weights(const Ranking& ranking, const Request& request,
                                 const EvalConfig& config);

// Exposure credited to each author by a single ranking. Every author of a
// ranked document appears in the result, possibly with zero exposure.
ExposureVector ranking_exposure(const Ranking& ranking, const Request& request,
                                const EvalConfig& config);

// Pointwise sum of ranking_exposure over the sequence. Identical rankings are
// folded together before summation, so k copies of one ranking yield exactly
// k times its exposure and the result does not depend on impression order.
ExposureVector sequence_exposure(const RankingSequence& seq,
                                 const Request& request,
                                 const EvalConfig& config);

// Per-document expected exposure under the policy that samples uniformly
// from rankings whose relevance never increases with rank, for a single
// impression. Closed form for binary grades.
std::map<DocId, double> document_target_exposure(const Request& request,
                                                 const EvalConfig& config);

// Author target exposure for num_rankings impressions: per-document targets
// summed over each author's documents, then scaled by num_rankings.
// Throws std::invalid_argument on an empty candidate set or zero impressions.
ExposureVector target_exposure(const Request& request, std::size_t num_rankings,
                               const EvalConfig& config);

inline constexpr std::size_t kBruteForceCandidateCap = 8;

// Reference implementation of target_exposure: averages sequence_exposure over
// every permutation of the candidates that keeps relevance non-increasing.
// Refuses requests with more than kBruteForceCandidateCap candidates.
ExposureVector target_exposure_bruteforce(const Request& request,
                                          std::size_t num_rankings,
                                          const EvalConfig& config);

}  // namespace fairrank

#include "fairrank/exposure.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace fairrank {

namespace {

// Relevance of a ranked document, resolving unknown ids per config.
// Returns nullptr for an unknown document in lenient mode.
const DocumentRecord* lookup(const DocId& doc, const Request& request,
                             const EvalConfig& config) {
  const DocumentRecord* record = request.find(doc);
  if (record == nullptr && config.strict_candidates) {
    throw EvaluationError(fmt::format(
        "query {}: document {} is not a candidate", request.qid(), doc));
  }
  return record;
}

void require_candidates(const Request& request, std::size_t num_rankings) {
  if (request.candidates().empty()) {
    throw std::invalid_argument(fmt::format(
        "query {}: target exposure needs a nonempty candidate set",
        request.qid()));
  }
  if (num_rankings == 0) {
    throw std::invalid_argument("target exposure needs at least one ranking");
  }
}

}  // namespace

PositionWeights position_weights(const Ranking& ranking, const Request& request,
                                 const EvalConfig& config) {
  PositionWeights weights;
  weights.reserve(ranking.items.size());
  double reach = 1.0;
  for (const auto& doc : ranking.items) {
    weights.push_back(reach);
    const DocumentRecord* record = lookup(doc, request, config);
    bool relevant = record != nullptr && record->relevant;
    reach *= config.gamma * (1.0 - config.stop_probability(relevant));
  }
  return weights;
}

ExposureVector ranking_exposure(const Ranking& ranking, const Request& request,
                                const EvalConfig& config) {
  PositionWeights weights = position_weights(ranking, request, config);
  ExposureVector exposure;
  for (std::size_t i = 0; i < ranking.items.size(); ++i) {
    const DocumentRecord* record = request.find(ranking.items[i]);
    if (record == nullptr) continue;
    for (const auto& author : record->authors) exposure[author] += weights[i];
  }
  return exposure;
}

ExposureVector sequence_exposure(const RankingSequence& seq,
                                 const Request& request,
                                 const EvalConfig& config) {
  std::map<std::vector<DocId>, std::size_t> distinct;
  for (const auto& ranking : seq.rankings) ++distinct[ranking.items];

  ExposureVector total;
  Ranking scratch;
  for (const auto& [items, count] : distinct) {
    scratch.items = items;
    for (const auto& [author, e] : ranking_exposure(scratch, request, config)) {
      total[author] += static_cast<double>(count) * e;
    }
  }
  return total;
}

std::map<DocId, double> document_target_exposure(const Request& request,
                                                 const EvalConfig& config) {
  const std::size_t n = request.size();
  const std::size_t r = request.num_relevant();

  // Relevant documents share positions 1..R uniformly.
  const double rel_step = config.gamma * (1.0 - config.stop_prob_relevant);
  double rel_sum = 0.0;
  double reach = 1.0;
  for (std::size_t i = 0; i < r; ++i) {
    rel_sum += reach;
    reach *= rel_step;
  }
  // reach is now the probability of arriving at position R+1.
  const double nonrel_step =
      config.gamma * (1.0 - config.stop_prob_nonrelevant);
  double nonrel_sum = 0.0;
  for (std::size_t i = r; i < n; ++i) {
    nonrel_sum += reach;
    reach *= nonrel_step;
  }

  const double per_relevant = r > 0 ? rel_sum / static_cast<double>(r) : 0.0;
  const double per_nonrelevant =
      n > r ? nonrel_sum / static_cast<double>(n - r) : 0.0;

  std::map<DocId, double> result;
  for (const auto& doc : request.candidates()) {
    result[doc.doc_id] = doc.relevant ? per_relevant : per_nonrelevant;
  }
  return result;
}

ExposureVector target_exposure(const Request& request, std::size_t num_rankings,
                               const EvalConfig& config) {
  require_candidates(request, num_rankings);
  std::map<DocId, double> per_doc = document_target_exposure(request, config);
  ExposureVector exposure;
  for (const auto& doc : request.candidates()) {
    for (const auto& author : doc.authors) {
      exposure[author] += per_doc.at(doc.doc_id);
    }
  }
  for (auto& [author, e] : exposure) e *= static_cast<double>(num_rankings);
  return exposure;
}

ExposureVector target_exposure_bruteforce(const Request& request,
                                          std::size_t num_rankings,
                                          const EvalConfig& config) {
  require_candidates(request, num_rankings);
  const std::size_t n = request.size();
  if (n > kBruteForceCandidateCap) {
    throw std::invalid_argument(fmt::format(
        "query {}: brute-force target limited to {} candidates, got {}",
        request.qid(), kBruteForceCandidateCap, n));
  }

  const auto& candidates = request.candidates();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  RankingSequence all;
  all.qid = request.qid();
  do {
    bool monotone = true;
    for (std::size_t i = 1; i < n && monotone; ++i) {
      monotone = candidates[order[i - 1]].relevant ||
                 !candidates[order[i]].relevant;
    }
    if (!monotone) continue;
    Ranking ranking;
    for (std::size_t idx : order) ranking.items.push_back(candidates[idx].doc_id);
    all.rankings.push_back(std::move(ranking));
  } while (std::next_permutation(order.begin(), order.end()));

  ExposureVector exposure = sequence_exposure(all, request, config);
  const double count = static_cast<double>(all.rankings.size());
  for (auto& [author, e] : exposure) {
    e = e / count * static_cast<double>(num_rankings);
  }
  return exposure;
}

}  // namespace fairrank

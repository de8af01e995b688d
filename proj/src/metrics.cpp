#include "fairrank/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include <fmt/format.h>

#include "fairrank/exposure.hpp"

namespace fairrank {

namespace {

// Calls fn(system_value, target_value) for every key in either map.
template <typename Fn>
void for_each_group(const GroupExposure& system, const GroupExposure& target,
                    Fn&& fn) {
  auto s = system.begin();
  auto t = target.begin();
  while (s != system.end() || t != target.end()) {
    if (t == target.end() || (s != system.end() && s->first < t->first)) {
      fn(s->second, 0.0);
      ++s;
    } else if (s == system.end() || t->first < s->first) {
      fn(0.0, t->second);
      ++t;
    } else {
      fn(s->second, t->second);
      ++s;
      ++t;
    }
  }
}

double mean_of(const std::vector<QueryMetrics>& rows,
               double QueryMetrics::*field) {
  if (rows.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& row : rows) sum += row.*field;
  return sum / static_cast<double>(rows.size());
}

}  // namespace

GroupExposureResult group_exposure(const ExposureVector& exposure,
                                   const GroupAssignment& groups) {
  GroupExposureResult result;
  for (const auto& [author, e] : exposure) {
    if (const GroupId* g = groups.find(author)) {
      result.groups[*g] += e;
    } else {
      result.unassigned += e;
    }
  }
  return result;
}

double ee_metric(const GroupExposure& system, const GroupExposure& target) {
  double sum = 0.0;
  for_each_group(system, target, [&](double s, double t) {
    sum += (s - t) * (s - t);
  });
  return std::sqrt(sum);
}

Decomposition decompose(const GroupExposure& system,
                        const GroupExposure& target) {
  Decomposition d;
  for_each_group(system, target, [&](double s, double t) {
    d.disparity += s * s;
    d.relevance += s * t;
  });
  return d;
}

QueryMetrics evaluate_query(const Request& request, const RankingSequence& seq,
                            const GroupAssignment& groups,
                            const EvalConfig& config) {
  ValidationReport report = validate_request_run(request, seq, config);
  if (report.has_violations()) {
    throw EvaluationError(report.first_violation());
  }

  QueryMetrics m;
  m.qid = request.qid();
  m.num_rankings = seq.rankings.size();
  for (const auto& issue : report.issues) m.warnings.push_back(issue.message);

  GroupExposureResult system =
      group_exposure(sequence_exposure(seq, request, config), groups);
  GroupExposureResult target = group_exposure(
      target_exposure(request, m.num_rankings, config), groups);

  m.ee = ee_metric(system.groups, target.groups);
  Decomposition d = decompose(system.groups, target.groups);
  m.disparity = d.disparity;
  m.relevance = d.relevance;
  m.system_group_exposure = std::move(system.groups);
  m.target_group_exposure = std::move(target.groups);
  m.unassigned_author_exposure = system.unassigned;
  m.unassigned_target_exposure = target.unassigned;
  return m;
}

RunMetrics evaluate_run(const std::string& run_id,
                        const std::vector<Request>& requests,
                        const std::map<QueryId, RankingSequence>& runs,
                        const GroupAssignment& groups, const EvalConfig& config,
                        std::size_t jobs) {
  RunMetrics result;
  result.run_id = run_id;

  std::map<QueryId, const Request*> by_qid;
  for (const auto& request : requests) by_qid.emplace(request.qid(), &request);

  auto mismatch = [&](std::string message) {
    if (config.strict_candidates) {
      throw EvaluationError(fmt::format("run {}: {}", run_id, message));
    }
    result.warnings.push_back(std::move(message));
  };

  // Work items in ascending qid order.
  std::vector<std::pair<const Request*, const RankingSequence*>> work;
  for (const auto& [qid, request] : by_qid) {
    auto it = runs.find(qid);
    if (it == runs.end()) {
      mismatch(fmt::format("query {} missing from run; skipped", qid));
      continue;
    }
    work.emplace_back(request, &it->second);
  }
  for (const auto& [qid, seq] : runs) {
    if (!by_qid.contains(qid)) {
      mismatch(fmt::format("run contains unknown query {}; skipped", qid));
    }
  }

  std::vector<QueryMetrics> slots(work.size());
  std::vector<std::exception_ptr> errors(work.size());
  auto evaluate_slot = [&](std::size_t i) {
    try {
      slots[i] = evaluate_query(*work[i].first, *work[i].second, groups, config);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t workers = std::min(std::max<std::size_t>(jobs, 1),
                                       std::max<std::size_t>(work.size(), 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < work.size(); ++i) evaluate_slot(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < work.size(); i = next++) {
          evaluate_slot(i);
        }
      });
    }
  }

  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
  for (const auto& m : slots) {
    for (const auto& w : m.warnings) result.warnings.push_back(w);
  }
  result.per_query = std::move(slots);
  result.mean_ee = mean_of(result.per_query, &QueryMetrics::ee);
  result.mean_disparity = mean_of(result.per_query, &QueryMetrics::disparity);
  result.mean_relevance = mean_of(result.per_query, &QueryMetrics::relevance);
  return result;
}

std::vector<LeaderboardRow> leaderboard(const std::vector<RunMetrics>& runs) {
  std::vector<LeaderboardRow> rows;
  rows.reserve(runs.size());
  for (const auto& run : runs) {
    rows.push_back({run.run_id, run.mean_ee, run.mean_disparity,
                    run.mean_relevance, run.per_query.size()});
  }
  return sort_leaderboard(std::move(rows));
}

std::vector<LeaderboardRow> sort_leaderboard(std::vector<LeaderboardRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.mean_ee != b.mean_ee) return a.mean_ee < b.mean_ee;
    return a.run_id < b.run_id;
  });
  return rows;
}

}  // namespace fairrank

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fairrank/core.hpp"

namespace fairrank::testing {

inline Request make_request(std::string qid,
                            std::vector<DocumentRecord> docs,
                            std::string text = "test query") {
  return Request(std::move(qid), std::move(text), std::move(docs));
}

inline Ranking ranking(std::vector<std::string> items) {
  return Ranking{std::move(items)};
}

inline RankingSequence sequence(std::string qid, std::vector<Ranking> rankings) {
  return RankingSequence{std::move(qid), std::move(rankings)};
}

// d1(rel, a1), d2(rel, a2), d3(nonrel, a2); a1 in g1, a2 in g2.
inline Request worked_request() {
  return make_request("q1", {{"d1", {"a1"}, true},
                             {"d2", {"a2"}, true},
                             {"d3", {"a2"}, false}});
}

inline GroupAssignment worked_groups() {
  GroupAssignment groups;
  groups.assign("a1", "g1");
  groups.assign("a2", "g2");
  return groups;
}

inline double exposure_of(const ExposureVector& v, const std::string& author) {
  auto it = v.find(author);
  return it == v.end() ? 0.0 : it->second;
}

// Largest absolute per-author difference over the union of keys.
inline double max_abs_diff(const ExposureVector& a, const ExposureVector& b) {
  double worst = 0.0;
  for (const auto& [k, v] : a) worst = std::max(worst, std::abs(v - exposure_of(b, k)));
  for (const auto& [k, v] : b) worst = std::max(worst, std::abs(v - exposure_of(a, k)));
  return worst;
}

// Random request with n candidates, r relevant, and authors drawn from a pool
// of `num_authors` (0-3 authors per document).
inline Request random_request(std::mt19937_64& rng, std::size_t n, std::size_t r,
                              std::size_t num_authors, std::string qid = "q") {
  std::vector<DocumentRecord> docs;
  std::uniform_int_distribution<std::size_t> author_count(0, 3);
  std::uniform_int_distribution<std::size_t> author_pick(0, num_authors - 1);
  for (std::size_t i = 0; i < n; ++i) {
    DocumentRecord d;
    d.doc_id = "d" + std::to_string(i);
    d.relevant = i < r;
    std::size_t k = author_count(rng);
    for (std::size_t j = 0; j < k; ++j) {
      d.authors.push_back("a" + std::to_string(author_pick(rng)));
    }
    docs.push_back(std::move(d));
  }
  std::shuffle(docs.begin(), docs.end(), rng);
  return make_request(std::move(qid), std::move(docs));
}

inline EvalConfig random_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  EvalConfig c;
  c.gamma = unit(rng);
  double a = unit(rng), b = unit(rng);
  c.stop_prob_relevant = std::max(a, b);
  c.stop_prob_nonrelevant = std::min(a, b);
  return c;
}

}  // namespace fairrank::testing

#pragma once

// Classical greedy diversification rankers plus floor and ceiling references.
// Relevance is cos(q, d) throughout; ties go to the lowest document index.

#include "ma4div/dataset.hpp"
#include "ma4div/metrics.hpp"

#include <random>
#include <vector>

namespace ma4div::baselines {

struct GreedyConfig {
  double lambda = 0.5;

  void validate() const;
};

/// Cosine similarity; 0 if either vector is zero.
template <typename A, typename B>
double cosine(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  const double norms = a.norm() * b.norm();
  return norms > 0.0 ? a.dot(b) / norms : 0.0;
}

/// Maximal marginal relevance: lambda cos(q, d) - (1 - lambda) max_sel cos(d, d').
metrics::RankedList mmr_rank(const data::QueryDocSet& item, const GreedyConfig& config);

/// xQuAD with uniform aspect weights and P(d | l) = J(d, l):
/// (1 - lambda) cos(q, d) + lambda sum_l (1/m) J(d, l) prod_sel (1 - J(d', l)).
metrics::RankedList xquad_rank(const data::QueryDocSet& item, const GreedyConfig& config);

metrics::RankedList random_rank(const data::QueryDocSet& item, std::mt19937_64& rng);

metrics::RankedList oracle_greedy_rank(const data::QueryDocSet& item,
                                       const metrics::MetricConfig& config);

/// Lambda grid 0.1, 0.2, ..., 0.9 used when tuning on a training split.
std::vector<double> lambda_grid();

}  // namespace ma4div::baselines

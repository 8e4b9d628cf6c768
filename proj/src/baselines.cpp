#include "ma4div/baselines.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ma4div::baselines {

void GreedyConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("greedy baseline: lambda must lie in [0, 1]");
  }
}

namespace {

Vector relevance(const data::QueryDocSet& item) {
  Vector rel(item.doc_count());
  for (Eigen::Index i = 0; i < rel.size(); ++i) {
    rel[i] = cosine(item.query, item.documents.row(i).transpose());
  }
  return rel;
}

// Greedy selection loop shared by both baselines: `utility(d, selected)`
// scores an unselected document against the current selection.
template <typename Utility>
metrics::RankedList greedy_select(int n, Utility&& utility) {
  std::vector<int> order;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  order.reserve(static_cast<std::size_t>(n));
  for (int step = 0; step < n; ++step) {
    int best = -1;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int d = 0; d < n; ++d) {
      if (used[static_cast<std::size_t>(d)]) continue;
      const double value = utility(d, order);
      if (best < 0 || value > best_value) {
        best = d;
        best_value = value;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    order.push_back(best);
  }
  return metrics::RankedList(std::move(order));
}

}  // namespace

metrics::RankedList mmr_rank(const data::QueryDocSet& item, const GreedyConfig& config) {
  config.validate();
  const Vector rel = relevance(item);
  const int n = static_cast<int>(item.doc_count());
  Tensor sim(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) sim(i, j) = cosine(item.documents.row(i), item.documents.row(j));
  }
  return greedy_select(n, [&](int d, const std::vector<int>& selected) {
    if (selected.empty()) return rel[d];
    double redundancy = -std::numeric_limits<double>::infinity();
    for (int s : selected) redundancy = std::max(redundancy, sim(d, s));
    return config.lambda * rel[d] - (1.0 - config.lambda) * redundancy;
  });
}

metrics::RankedList xquad_rank(const data::QueryDocSet& item, const GreedyConfig& config) {
  config.validate();
  const Vector rel = relevance(item);
  const int n = static_cast<int>(item.doc_count());
  const Eigen::Index m = item.subtopic_count();
  // Probability that aspect l is still unsatisfied by the selection.
  Vector unsatisfied = Vector::Ones(m);
  std::size_t seen = 0;
  return greedy_select(n, [&](int d, const std::vector<int>& selected) {
    for (; seen < selected.size(); ++seen) {
      const int s = selected[seen];
      for (Eigen::Index l = 0; l < m; ++l) unsatisfied[l] *= 1.0 - item.judgments(s, l);
    }
    double diversity = 0.0;
    for (Eigen::Index l = 0; l < m; ++l) {
      diversity += item.judgments(d, l) * unsatisfied[l] / static_cast<double>(m);
    }
    return (1.0 - config.lambda) * rel[d] + config.lambda * diversity;
  });
}

metrics::RankedList random_rank(const data::QueryDocSet& item, std::mt19937_64& rng) {
  std::vector<int> order(static_cast<std::size_t>(item.doc_count()));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return metrics::RankedList(std::move(order));
}

metrics::RankedList oracle_greedy_rank(const data::QueryDocSet& item,
                                       const metrics::MetricConfig& config) {
  return metrics::greedy_ideal_ranking(item.judgments, config.alpha);
}

std::vector<double> lambda_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 9; ++i) grid.push_back(i / 10.0);
  return grid;
}

}  // namespace ma4div::baselines

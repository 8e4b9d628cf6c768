#include "ma4div/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ma4div::metrics {

void MetricConfig::validate(Eigen::Index n) const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("metric alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  if (k < 1 || k > n) {
    throw std::invalid_argument("metric cutoff k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(n) + "]");
  }
}

RankedList::RankedList(std::vector<int> order) : order_(std::move(order)) {
  std::vector<bool> seen(order_.size(), false);
  for (int doc : order_) {
    if (doc < 0 || doc >= static_cast<int>(order_.size()) || seen[static_cast<std::size_t>(doc)]) {
      throw std::invalid_argument("ranking is not a permutation of 0.." +
                                  std::to_string(static_cast<int>(order_.size()) - 1));
    }
    seen[static_cast<std::size_t>(doc)] = true;
  }
}

RankedList RankedList::identity(int n) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  return RankedList(std::move(order));
}

std::vector<int> RankedList::ranks() const {
  std::vector<int> out(order_.size());
  for (std::size_t pos = 0; pos < order_.size(); ++pos) {
    out[static_cast<std::size_t>(order_[pos])] = static_cast<int>(pos) + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------

DiversityAccumulator::DiversityAccumulator(const Judgments& judgments, double alpha)
    : judgments_(&judgments), alpha_(alpha), counts_(static_cast<std::size_t>(judgments.cols()), 0) {}

double DiversityAccumulator::novelty_gain(int doc) const {
  double gain = 0.0;
  for (Eigen::Index l = 0; l < judgments_->cols(); ++l) {
    if ((*judgments_)(doc, l) != 0) gain += std::pow(1.0 - alpha_, counts_[static_cast<std::size_t>(l)]);
  }
  return gain;
}

double DiversityAccumulator::push(int doc) {
  const Judgments& y = *judgments_;
  if (doc < 0 || doc >= y.rows()) throw std::out_of_range("document index out of range");
  ++position_;
  const double rank = position_;
  const double m = static_cast<double>(y.cols());
  double novelty = 0.0;
  double intent = 0.0;
  for (Eigen::Index l = 0; l < y.cols(); ++l) {
    if (y(doc, l) == 0) continue;
    int& c = counts_[static_cast<std::size_t>(l)];
    novelty += std::pow(1.0 - alpha_, c);
    intent += std::ldexp(1.0, -(c + 1)) / m;
    if (c == 0) ++covered_;
    ++c;
  }
  const double gain = novelty / std::log2(1.0 + rank);
  alpha_dcg_ += gain;
  err_ia_ += intent / rank;
  return gain;
}

// ---------------------------------------------------------------------------

namespace {

void check_ranking(const RankedList& ranking, const Judgments& judgments) {
  if (ranking.size() != judgments.rows()) {
    throw std::invalid_argument("ranking covers " + std::to_string(ranking.size()) +
                                " documents, judgments have " + std::to_string(judgments.rows()));
  }
}

DiversityAccumulator run_prefix(const RankedList& ranking, const Judgments& judgments,
                                double alpha, int k) {
  DiversityAccumulator acc(judgments, alpha);
  for (int pos = 0; pos < k; ++pos) acc.push(ranking[pos]);
  return acc;
}

}  // namespace

bool is_degenerate(const Judgments& judgments) { return (judgments.array() == 0).all(); }

double alpha_dcg(const RankedList& ranking, const Judgments& judgments, const MetricConfig& config) {
  check_ranking(ranking, judgments);
  config.validate(judgments.rows());
  return run_prefix(ranking, judgments, config.alpha, config.k).alpha_dcg();
}

RankedList greedy_ideal_ranking(const Judgments& judgments, double alpha) {
  const int n = static_cast<int>(judgments.rows());
  DiversityAccumulator acc(judgments, alpha);
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  for (int step = 0; step < n; ++step) {
    int best = -1;
    double best_gain = -1.0;
    for (int d = 0; d < n; ++d) {
      if (used[static_cast<std::size_t>(d)]) continue;
      const double gain = acc.novelty_gain(d);
      if (gain > best_gain) {
        best = d;
        best_gain = gain;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    acc.push(best);
    order.push_back(best);
  }
  return RankedList(std::move(order));
}

double ideal_alpha_dcg(const Judgments& judgments, const MetricConfig& config, IdealMode mode) {
  config.validate(judgments.rows());
  if (mode == IdealMode::Exhaustive) {
    return brute_force_best(judgments, config, Metric::AlphaDcg).value;
  }
  return alpha_dcg(greedy_ideal_ranking(judgments, config.alpha), judgments, config);
}

double alpha_ndcg(const RankedList& ranking, const Judgments& judgments, const MetricConfig& config) {
  const double dcg = alpha_dcg(ranking, judgments, config);
  const double ideal = ideal_alpha_dcg(judgments, config);
  if (ideal <= 0.0) return 0.0;
  return std::min(1.0, dcg / ideal);
}

double err_ia(const RankedList& ranking, const Judgments& judgments, const MetricConfig& config) {
  check_ranking(ranking, judgments);
  config.validate(judgments.rows());
  return run_prefix(ranking, judgments, config.alpha, config.k).err_ia();
}

double s_recall(const RankedList& ranking, const Judgments& judgments, int k) {
  check_ranking(ranking, judgments);
  if (k < 1 || k > judgments.rows()) {
    throw std::invalid_argument("s_recall cutoff k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(judgments.rows()) + "]");
  }
  const auto recallable = (judgments.array() != 0).colwise().any().count();
  if (recallable == 0) return 0.0;
  const int covered = run_prefix(ranking, judgments, 0.5, k).covered_subtopics();
  return static_cast<double>(covered) / static_cast<double>(recallable);
}

double evaluate(Metric metric, const RankedList& ranking, const Judgments& judgments,
                const MetricConfig& config) {
  switch (metric) {
    case Metric::AlphaDcg:
      return alpha_dcg(ranking, judgments, config);
    case Metric::AlphaNdcg: {
      const double ideal = ideal_alpha_dcg(judgments, config);
      return ideal > 0.0 ? alpha_dcg(ranking, judgments, config) / ideal : 0.0;
    }
    case Metric::ErrIa:
      return err_ia(ranking, judgments, config);
    case Metric::SRecall:
      return s_recall(ranking, judgments, config.k);
  }
  throw std::logic_error("unknown metric");
}

BestRanking brute_force_best(const Judgments& judgments, const MetricConfig& config, Metric metric) {
  const int n = static_cast<int>(judgments.rows());
  if (n > kMaxEnumerableDocs) {
    throw std::invalid_argument("brute force limited to n <= " + std::to_string(kMaxEnumerableDocs) +
                                ", got n=" + std::to_string(n));
  }
  config.validate(n);
  const double ideal =
      metric == Metric::AlphaNdcg ? ideal_alpha_dcg(judgments, config) : 1.0;

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  BestRanking best;
  bool first = true;
  do {
    const RankedList candidate(order);
    double value = 0.0;
    switch (metric) {
      case Metric::AlphaDcg:
        value = run_prefix(candidate, judgments, config.alpha, config.k).alpha_dcg();
        break;
      case Metric::AlphaNdcg:
        value = ideal > 0.0
                    ? run_prefix(candidate, judgments, config.alpha, config.k).alpha_dcg() / ideal
                    : 0.0;
        break;
      case Metric::ErrIa:
        value = run_prefix(candidate, judgments, config.alpha, config.k).err_ia();
        break;
      case Metric::SRecall:
        value = s_recall(candidate, judgments, config.k);
        break;
    }
    // std::next_permutation walks in lexicographic order, so strict
    // improvement keeps the smallest maximiser.
    if (first || value > best.value) {
      best = {candidate, value};
      first = false;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

}  // namespace ma4div::metrics

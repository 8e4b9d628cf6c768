#pragma once

// Subtopic-aware ranking metrics over binary judgments.
//
// Coverage counts c_l(i) always count documents at ranks strictly before
// document i, so a subtopic's first appearance earns the full gain.

#include "ma4div/tensor.hpp"

#include <vector>

namespace ma4div::metrics {

struct MetricConfig {
  double alpha = 0.5;
  int k = 10;

  /// Throws std::invalid_argument unless 0 < alpha < 1 and 1 <= k <= n.
  void validate(Eigen::Index n) const;
};

/// A permutation of document indices 0..n-1, best first.
class RankedList {
 public:
  RankedList() = default;
  /// Throws std::invalid_argument if `order` is not a permutation.
  explicit RankedList(std::vector<int> order);

  static RankedList identity(int n);

  const std::vector<int>& order() const { return order_; }
  int size() const { return static_cast<int>(order_.size()); }
  int operator[](int position) const { return order_[static_cast<std::size_t>(position)]; }
  /// 1-based rank of every document.
  std::vector<int> ranks() const;

  bool operator==(const RankedList&) const = default;

 private:
  std::vector<int> order_;
};

/// Incremental evaluation: push documents in rank order and read the
/// running totals. The ranking metrics below are all computed through it.
class DiversityAccumulator {
 public:
  DiversityAccumulator(const Judgments& judgments, double alpha);

  /// Appends a document at the next rank; returns its alpha-DCG gain.
  double push(int doc);

  int position() const { return position_; }
  double alpha_dcg() const { return alpha_dcg_; }
  double err_ia() const { return err_ia_; }
  int covered_subtopics() const { return covered_; }
  /// Sum over subtopics of y_dl (1 - alpha)^{c_l}, before discounting.
  double novelty_gain(int doc) const;

 private:
  const Judgments* judgments_;
  double alpha_;
  std::vector<int> counts_;
  int position_ = 0;
  int covered_ = 0;
  double alpha_dcg_ = 0.0;
  double err_ia_ = 0.0;
};

bool is_degenerate(const Judgments& judgments);

double alpha_dcg(const RankedList& ranking, const Judgments& judgments, const MetricConfig& config);

/// Repeatedly takes the document with the largest marginal alpha gain,
/// ties to the lowest index.
RankedList greedy_ideal_ranking(const Judgments& judgments, double alpha);

enum class IdealMode { Greedy, Exhaustive };

/// Exhaustive mode enumerates all n! orders and requires n <= 8.
double ideal_alpha_dcg(const Judgments& judgments, const MetricConfig& config,
                       IdealMode mode = IdealMode::Greedy);

/// alpha_dcg / greedy ideal, clamped to 1. Degenerate judgments (no
/// covered subtopic) score 0; check is_degenerate() to report them.
double alpha_ndcg(const RankedList& ranking, const Judgments& judgments, const MetricConfig& config);

double err_ia(const RankedList& ranking, const Judgments& judgments, const MetricConfig& config);

/// Fraction of the recallable subtopics covered in the top k; 0 when
/// nothing is recallable.
double s_recall(const RankedList& ranking, const Judgments& judgments, int k);

enum class Metric { AlphaDcg, AlphaNdcg, ErrIa, SRecall };

/// AlphaNdcg here is the unclamped ratio against the greedy ideal.
double evaluate(Metric metric, const RankedList& ranking, const Judgments& judgments,
                const MetricConfig& config);

struct BestRanking {
  RankedList ranking;
  double value = 0.0;
};

/// Exact maximiser by enumeration; the lexicographically smallest order wins
/// ties. Requires n <= 8.
BestRanking brute_force_best(const Judgments& judgments, const MetricConfig& config, Metric metric);

inline constexpr int kMaxEnumerableDocs = 8;

}  // namespace ma4div::metrics

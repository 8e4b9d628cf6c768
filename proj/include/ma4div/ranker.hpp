#pragma once

#include "ma4div/agent.hpp"
#include "ma4div/dataset.hpp"
#include "ma4div/metrics.hpp"

#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ma4div::ranker {

/// Integer ranking score per document, each in 1..|A|.
using ScoreVector = std::vector<int>;

/// Descending by score; equal scores keep ascending document index.
metrics::RankedList sort_by_scores(const ScoreVector& scores);

struct RankOutput {
  metrics::RankedList ranking;
  ScoreVector scores;
  agent::JointAction actions;
};

/// One-shot ranking: score every document with the agent network, pick
/// actions epsilon-greedily, and sort by the chosen scores.
RankOutput rank(const data::QueryDocSet& item, const agent::AgentParams& params, double epsilon,
                std::mt19937_64& rng);

/// Greedy (epsilon = 0) ranking; needs no random stream.
metrics::RankedList rank_greedy(const data::QueryDocSet& item, const agent::AgentParams& params);

using RankingPolicy = std::function<metrics::RankedList(const data::QueryDocSet&)>;

/// Mean of the six headline metrics over a dataset.
struct EvaluationReport {
  std::string method;
  double alpha_ndcg5 = 0.0;
  double alpha_ndcg10 = 0.0;
  double err_ia5 = 0.0;
  double err_ia10 = 0.0;
  double s_recall5 = 0.0;
  double s_recall10 = 0.0;
  int queries = 0;
  /// Queries whose documents cover no subtopic; counted with metric 0.
  int degenerate = 0;
};

/// Cutoffs 5 and 10 are clamped to the number of documents.
EvaluationReport evaluate_rankings(const data::Dataset& dataset, const RankingPolicy& policy,
                                   double alpha, std::string method = {});
EvaluationReport evaluate_policy(const data::Dataset& dataset, const agent::AgentParams& params,
                                 const metrics::MetricConfig& config);

/// Mean alpha-NDCG@k of a policy; used for training curves and thresholds.
double mean_alpha_ndcg(const data::Dataset& dataset, const RankingPolicy& policy,
                       const metrics::MetricConfig& config);

void write_table_jsonl(std::span<const EvaluationReport> rows, std::ostream& out);
void write_table_text(std::span<const EvaluationReport> rows, std::ostream& out);

}  // namespace ma4div::ranker

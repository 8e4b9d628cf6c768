#include "ma4div/ranker.hpp"

#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace ma4div::ranker {

metrics::RankedList sort_by_scores(const ScoreVector& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  return metrics::RankedList(std::move(order));
}

RankOutput rank(const data::QueryDocSet& item, const agent::AgentParams& params, double epsilon,
                std::mt19937_64& rng) {
  const Tensor qvals = agent::q_values(item.query, item.documents, params);
  agent::JointAction actions = agent::select_actions(qvals, epsilon, rng);
  // Action m is score m.
  ScoreVector scores = actions;
  metrics::RankedList ranking = sort_by_scores(scores);
  return {std::move(ranking), std::move(scores), std::move(actions)};
}

metrics::RankedList rank_greedy(const data::QueryDocSet& item, const agent::AgentParams& params) {
  const Tensor qvals = agent::q_values(item.query, item.documents, params);
  ScoreVector scores(static_cast<std::size_t>(qvals.rows()));
  for (Eigen::Index i = 0; i < qvals.rows(); ++i) {
    scores[static_cast<std::size_t>(i)] = agent::greedy_action(qvals.row(i));
  }
  return sort_by_scores(scores);
}

EvaluationReport evaluate_rankings(const data::Dataset& dataset, const RankingPolicy& policy,
                                   double alpha, std::string method) {
  if (dataset.empty()) throw std::invalid_argument("evaluate: empty dataset");
  const int n = static_cast<int>(dataset.docs_per_query);
  const metrics::MetricConfig at5{alpha, std::min(5, n)};
  const metrics::MetricConfig at10{alpha, std::min(10, n)};
  EvaluationReport r;
  r.method = std::move(method);
  for (const data::QueryDocSet& item : dataset.items) {
    const metrics::RankedList ranking = policy(item);
    ++r.queries;
    if (metrics::is_degenerate(item.judgments)) {
      ++r.degenerate;
      continue;
    }
    r.alpha_ndcg5 += metrics::alpha_ndcg(ranking, item.judgments, at5);
    r.alpha_ndcg10 += metrics::alpha_ndcg(ranking, item.judgments, at10);
    r.err_ia5 += metrics::err_ia(ranking, item.judgments, at5);
    r.err_ia10 += metrics::err_ia(ranking, item.judgments, at10);
    r.s_recall5 += metrics::s_recall(ranking, item.judgments, at5.k);
    r.s_recall10 += metrics::s_recall(ranking, item.judgments, at10.k);
  }
  const double count = r.queries;
  for (double* v : {&r.alpha_ndcg5, &r.alpha_ndcg10, &r.err_ia5, &r.err_ia10, &r.s_recall5,
                    &r.s_recall10}) {
    *v /= count;
  }
  return r;
}

EvaluationReport evaluate_policy(const data::Dataset& dataset, const agent::AgentParams& params,
                                 const metrics::MetricConfig& config) {
  return evaluate_rankings(
      dataset, [&](const data::QueryDocSet& item) { return rank_greedy(item, params); },
      config.alpha, "ma4div");
}

double mean_alpha_ndcg(const data::Dataset& dataset, const RankingPolicy& policy,
                       const metrics::MetricConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("mean_alpha_ndcg: empty dataset");
  double total = 0.0;
  for (const data::QueryDocSet& item : dataset.items) {
    total += metrics::alpha_ndcg(policy(item), item.judgments, config);
  }
  return total / static_cast<double>(dataset.size());
}

void write_table_jsonl(std::span<const EvaluationReport> rows, std::ostream& out) {
  for (const EvaluationReport& r : rows) {
    nlohmann::ordered_json j;
    j["method"] = r.method;
    j["alpha_ndcg@5"] = r.alpha_ndcg5;
    j["alpha_ndcg@10"] = r.alpha_ndcg10;
    j["err_ia@5"] = r.err_ia5;
    j["err_ia@10"] = r.err_ia10;
    j["s_recall@5"] = r.s_recall5;
    j["s_recall@10"] = r.s_recall10;
    j["queries"] = r.queries;
    j["degenerate_queries"] = r.degenerate;
    out << j.dump() << '\n';
  }
}

void write_table_text(std::span<const EvaluationReport> rows, std::ostream& out) {
  out << std::left << std::setw(12) << "method" << std::right;
  for (const char* h : {"a-NDCG@5", "a-NDCG@10", "ERR-IA@5", "ERR-IA@10", "S-rec@5", "S-rec@10"}) {
    out << std::setw(11) << h;
  }
  out << std::setw(9) << "queries" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const EvaluationReport& r : rows) {
    out << std::left << std::setw(12) << r.method << std::right;
    for (double v : {r.alpha_ndcg5, r.alpha_ndcg10, r.err_ia5, r.err_ia10, r.s_recall5,
                     r.s_recall10}) {
      out << std::setw(11) << v;
    }
    out << std::setw(9) << r.queries;
    if (r.degenerate > 0) out << "  (" << r.degenerate << " degenerate)";
    out << '\n';
  }
  out << std::defaultfloat;
}

}  // namespace ma4div::ranker

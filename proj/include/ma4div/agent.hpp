#pragma once

// Shared per-document Q-network. All n agents evaluate the same parameters
// on their own observation (q, d_i, e_i), where e_i is document i's row of a
// multi-head self-attention over all documents. There is no positional
// encoding, so the network is permutation equivariant in the documents.

#include "ma4div/layers.hpp"

#include <random>
#include <vector>

namespace ma4div::agent {

struct AgentConfig {
  int embedding_dim = 32;
  int attention_dim = 64;  // z
  int heads = 4;
  int blocks = 1;
  bool residual = false;
  int hidden_width = 128;
  int hidden_layers = 2;
  int actions = 10;  // |A|

  int head_dim() const { return attention_dim / heads; }
  void validate() const;
};

struct AttentionBlock {
  // Per-head projections are stored side by side: head h owns columns
  // [h * d_k, (h + 1) * d_k).
  diff::Parameter w_query;  // in x z
  diff::Parameter w_key;    // in x z
  diff::Parameter w_value;  // in x z
  diff::Parameter w_out;    // z x z
};

struct AgentParams {
  AgentConfig config;
  std::vector<AttentionBlock> attention;
  std::vector<DenseLayer> head;

  static AgentParams init(const AgentConfig& config, std::mt19937_64& rng);

  std::vector<diff::Parameter*> parameters();
};

diff::Var cross_features(diff::Graph& g, diff::Var documents, const AgentParams& params);
Tensor cross_features(const Tensor& documents, const AgentParams& params);

/// n x |A| action values, row i for document i.
diff::Var q_values(diff::Graph& g, const Vector& query, const Tensor& documents,
                   const AgentParams& params);
Tensor q_values(const Vector& query, const Tensor& documents, const AgentParams& params);

/// Actions are 1-based: action m means ranking score m.
using JointAction = std::vector<int>;

/// Lowest action index among the maxima of `row`.
int greedy_action(const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// Independent epsilon-greedy choice per agent.
JointAction select_actions(const Tensor& qvals, double epsilon, std::mt19937_64& rng);

/// eps(t) = max(floor, start - t / horizon).
struct ExplorationSchedule {
  double start = 1.0;
  double floor = 0.05;
  long horizon = 100;

  double operator()(long t) const;
};

}  // namespace ma4div::agent

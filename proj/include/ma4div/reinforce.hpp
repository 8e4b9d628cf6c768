#pragma once

// Sequential single-agent baseline: one document is chosen per time step by
// a softmax policy over the remaining documents, so a ranking of n
// documents takes n decisions. Trained on-policy with REINFORCE, one update
// per episode. The per-step reward is the alpha-DCG gain of the chosen
// position (normalised by the ideal), so with gamma = 1 the return of the
// first step telescopes to alpha-DCG@k / ideal.

#include "ma4div/dataset.hpp"
#include "ma4div/diff.hpp"
#include "ma4div/layers.hpp"
#include "ma4div/metrics.hpp"
#include "ma4div/trainer.hpp"

#include <optional>
#include <random>
#include <vector>

namespace ma4div::reinforce {

struct PolicyConfig {
  int embedding_dim = 32;
  int hidden_width = 128;
  int hidden_layers = 2;
};

/// Scores concat(q, d, mean of already selected documents) with an MLP.
struct SequentialPolicy {
  PolicyConfig config;
  std::vector<DenseLayer> mlp;

  static SequentialPolicy init(const PolicyConfig& config, std::mt19937_64& rng);
  std::vector<diff::Parameter*> parameters();
};

/// Log-probabilities (1 x |remaining|) of choosing each remaining document.
diff::Var step_log_probs(diff::Graph& g, const data::QueryDocSet& item,
                         const std::vector<int>& remaining, const Vector& selected_mean,
                         const SequentialPolicy& policy);

/// Argmax decision at every step, ties to the lowest document index.
metrics::RankedList rank_greedy(const data::QueryDocSet& item, const SequentialPolicy& policy);

struct Episode {
  metrics::RankedList ranking;
  /// Normalised alpha-DCG gain of each step (0 past the cutoff).
  std::vector<double> rewards;
  int decisions = 0;
};

/// Samples a full episode and accumulates the REINFORCE loss
/// -sum_t G_t log pi(a_t | s_t) into `g`. Returns the loss Var through `loss`.
Episode sample_episode(diff::Graph& g, const data::QueryDocSet& item,
                       const SequentialPolicy& policy, const metrics::MetricConfig& reward,
                       double gamma, std::mt19937_64& rng, diff::Var& loss);

/// Discounted reward-to-go for every step.
std::vector<double> returns_to_go(const std::vector<double>& rewards, double gamma);

struct ReinforceConfig {
  int epochs = 250;
  double gamma = 1.0;
  metrics::MetricConfig reward{0.5, 10};
  diff::OptimizerConfig optimizer{};
  PolicyConfig policy{};
  int eval_every = 1;
  std::uint64_t seed = 1;
  std::optional<double> stop_at;

  void validate() const;
};

struct ReinforceResult {
  SequentialPolicy final_policy;
  SequentialPolicy best_policy;
  std::vector<trainer::LogRecord> log;
  long decisions = 0;
  std::optional<long> episodes_to_target;
  std::optional<double> seconds_to_target;
};

ReinforceResult reinforce_baseline_train(const data::Dataset& train_set,
                                         const data::Dataset& test_set,
                                         const ReinforceConfig& config);

}  // namespace ma4div::reinforce

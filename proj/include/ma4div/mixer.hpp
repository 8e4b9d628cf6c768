#pragma once

// Monotone value mixing:
//   Q_tot = W2 . elu(W1 . q + B1) + B2
// with W1 = |FC_w1(s)| (H x n), B1 = FC_b1(s), W2 = |FC_w2(s)| (1 x H),
// B2 = FC_b2(s). Non-negative mixing weights make dQ_tot/dQ_i >= 0.

#include "ma4div/agent.hpp"
#include "ma4div/dataset.hpp"
#include "ma4div/layers.hpp"

#include <random>
#include <vector>

namespace ma4div::mixer {

struct MixerConfig {
  int agents = 10;      // n
  int state_dim = 352;  // (n + 1) * L
  int hidden = 32;      // H
  /// Only switched off to build negative controls for the monotonicity checks.
  bool absolute_weights = true;

  void validate() const;
};

struct MixerParams {
  MixerConfig config;
  DenseLayer hyper_w1;  // s -> H * n
  DenseLayer hyper_b1;  // s -> H
  DenseLayer hyper_w2;  // s -> H
  DenseLayer hyper_b2;  // s -> 1

  static MixerParams init(const MixerConfig& config, std::mt19937_64& rng);

  std::vector<diff::Parameter*> parameters();
};

/// `chosen_q` is n x 1; returns a 1 x 1 Var.
diff::Var mix(diff::Graph& g, diff::Var chosen_q, const Vector& state, const MixerParams& params);
double mix(const Vector& chosen_q, const Vector& state, const MixerParams& params);

struct MonotonicityReport {
  int trials = 0;
  long checks = 0;
  struct Violation {
    int trial;
    int agent;
    double derivative;
  };
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

/// Central finite differences of Q_tot in each Q_i at random Gaussian states
/// and chosen values; any derivative below -1e-9 is reported.
MonotonicityReport monotonicity_check(const MixerParams& params, int trials, std::mt19937_64& rng);

inline constexpr int kMaxIgmAgents = 4;
inline constexpr int kMaxIgmActions = 6;

/// True iff exhaustive maximisation of Q_tot over all |A|^n joint actions
/// (lexicographically smallest maximiser) equals the per-agent greedy joint
/// action. Rejects n > 4 or |A| > 6.
bool argmax_consistency_check(const agent::AgentParams& agent_params,
                              const MixerParams& mixer_params, const data::QueryDocSet& instance);

}  // namespace ma4div::mixer

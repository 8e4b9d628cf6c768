#pragma once

// Off-policy training of the agent network together with the mixer.
//
// Every episode is a single step: one joint action ranks the whole list and
// earns alpha-NDCG@k. With no successor state, the TD target is the reward
// itself, so no target network exists.

#include "ma4div/agent.hpp"
#include "ma4div/dataset.hpp"
#include "ma4div/diff.hpp"
#include "ma4div/metrics.hpp"
#include "ma4div/mixer.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ma4div::trainer {

struct EpisodeTuple {
  /// Index of the query in the training dataset; the observation is (q, D).
  std::size_t query = 0;
  Vector state;
  agent::JointAction actions;
  double reward = 0.0;
  bool degenerate = false;
};

/// Fixed-capacity FIFO store of episodes.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(EpisodeTuple tuple);

  std::size_t size() const { return slots_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t inserted() const { return inserted_; }
  /// i = 0 is the oldest stored episode.
  const EpisodeTuple& operator[](std::size_t i) const;

  /// Uniform without replacement; throws if fewer than `count` are stored.
  std::vector<const EpisodeTuple*> sample(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::vector<EpisodeTuple> slots_;
  std::size_t next_ = 0;
  std::uint64_t inserted_ = 0;
};

struct Model {
  agent::AgentParams agent;
  mixer::MixerParams mixer;

  static Model init(const agent::AgentConfig& agent_config, int mixer_hidden,
                    const data::Dataset& shape, std::mt19937_64& rng);

  std::vector<diff::Parameter*> parameters();
};

struct TrainerConfig {
  int epochs = 250;             // N_epoch
  int updates_per_epoch = 8;    // N_update
  int batch_size = 32;          // b
  int buffer_capacity = 5000;   // C
  /// Kept for completeness; single-step episodes never discount.
  double gamma = 0.99;
  metrics::MetricConfig reward{0.5, 10};
  /// Measured in collected episodes.
  agent::ExplorationSchedule exploration{1.0, 0.05, 4000};
  diff::OptimizerConfig optimizer{};
  agent::AgentConfig agent{};
  int mixer_hidden = 32;
  int eval_every = 1;  // epochs
  std::uint64_t seed = 1;
  /// Stop once the training-split metric reaches this value.
  std::optional<double> stop_at;

  void validate() const;
};

/// alpha-NDCG@k of the ranking that `actions` induces on `item`.
double episode_reward(const data::QueryDocSet& item, const agent::JointAction& actions,
                      const metrics::MetricConfig& config);

/// y_tot for a stored tuple: the reward, since no next state exists.
double one_step_target(const EpisodeTuple& tuple);

struct RolloutStats {
  int episodes = 0;
  int degenerate = 0;
  double mean_reward = 0.0;
};

/// One episode per query in `dataset`, appended in dataset order. `step` is
/// the global episode counter feeding the exploration schedule; it advances
/// by one per episode.
RolloutStats rollout_epoch(const data::Dataset& dataset, const agent::AgentParams& params,
                           const agent::ExplorationSchedule& schedule, long& step,
                           const metrics::MetricConfig& reward, ReplayBuffer& buffer,
                           std::mt19937_64& rng);

struct TdStats {
  double loss = 0.0;
  /// Sampled tuples whose target was checked against a recomputed reward.
  long target_checks = 0;
};

/// Builds sum_i (y_i - Q_tot,i)^2 for the batch, using each tuple's stored
/// actions. Gradients are written to `graph`; no parameter is modified.
diff::Var td_loss(diff::Graph& graph, std::span<const EpisodeTuple* const> batch,
                  const data::Dataset& dataset, const Model& model);

/// Samples a batch, computes the loss and applies one optimizer step.
/// Throws std::logic_error if a target differs from the recomputed reward.
TdStats td_update(const ReplayBuffer& buffer, const data::Dataset& dataset, Model& model,
                  diff::Optimizer& optimizer, int batch_size, const metrics::MetricConfig& reward,
                  std::mt19937_64& rng);

struct LogRecord {
  int epoch = 0;
  long episodes = 0;
  long updates = 0;
  double wall_seconds = 0.0;
  double train_metric = 0.0;
  std::optional<double> test_metric;
  double loss = 0.0;
  double epsilon = 0.0;
};

struct TrainResult {
  Model final_model;
  Model best_model;
  std::vector<LogRecord> log;
  long target_checks = 0;
  /// Episodes collected when the stop_at threshold was first met.
  std::optional<long> episodes_to_target;
  std::optional<double> seconds_to_target;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, Model last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const Model& last_good() const { return last_good_; }

 private:
  Model last_good_;
};

/// Evaluates on `test` when it is non-empty; the best model is chosen on
/// test when available, on train otherwise.
TrainResult train(const data::Dataset& train_set, const data::Dataset& test_set,
                  const TrainerConfig& config);

void write_log_jsonl(std::span<const LogRecord> log, std::ostream& out);
/// Tab-separated epoch / train / test series for plotting.
void write_curve(std::span<const LogRecord> log, std::ostream& out);

}  // namespace ma4div::trainer

#include "ma4div/trainer.hpp"

#include "ma4div/ranker.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

namespace ma4div::trainer {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be >= 1");
  slots_.reserve(capacity);
}

void ReplayBuffer::push(EpisodeTuple tuple) {
  if (slots_.size() < capacity_) {
    slots_.push_back(std::move(tuple));
  } else {
    slots_[next_] = std::move(tuple);
  }
  next_ = (next_ + 1) % capacity_;
  ++inserted_;
}

const EpisodeTuple& ReplayBuffer::operator[](std::size_t i) const {
  if (i >= slots_.size()) throw std::out_of_range("replay buffer index out of range");
  const std::size_t oldest = slots_.size() < capacity_ ? 0 : next_;
  return slots_[(oldest + i) % slots_.size()];
}

std::vector<const EpisodeTuple*> ReplayBuffer::sample(std::size_t count,
                                                      std::mt19937_64& rng) const {
  if (count > slots_.size()) {
    throw std::invalid_argument("replay buffer holds " + std::to_string(slots_.size()) +
                                " episodes, batch needs " + std::to_string(count));
  }
  // Partial Fisher-Yates over slot indices.
  std::vector<std::size_t> idx(slots_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<const EpisodeTuple*> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.push_back(&slots_[idx[i]]);
  }
  return out;
}

// ---------------------------------------------------------------------------

Model Model::init(const agent::AgentConfig& agent_config, int mixer_hidden,
                  const data::Dataset& shape, std::mt19937_64& rng) {
  if (agent_config.embedding_dim != shape.embedding_dim) {
    throw std::invalid_argument("agent embedding dim " + std::to_string(agent_config.embedding_dim) +
                                " does not match dataset dim " +
                                std::to_string(shape.embedding_dim));
  }
  mixer::MixerConfig mc;
  mc.agents = static_cast<int>(shape.docs_per_query);
  mc.state_dim = static_cast<int>((shape.docs_per_query + 1) * shape.embedding_dim);
  mc.hidden = mixer_hidden;
  agent::AgentParams a = agent::AgentParams::init(agent_config, rng);
  return Model{std::move(a), mixer::MixerParams::init(mc, rng)};
}

std::vector<diff::Parameter*> Model::parameters() {
  std::vector<diff::Parameter*> out = agent.parameters();
  for (diff::Parameter* p : mixer.parameters()) out.push_back(p);
  return out;
}

void TrainerConfig::validate() const {
  if (epochs < 1 || updates_per_epoch < 0 || batch_size < 1 || buffer_capacity < 1 ||
      eval_every < 1) {
    throw std::invalid_argument("trainer: epochs, batch size, capacity and eval cadence must be positive");
  }
  if (batch_size > buffer_capacity) {
    throw std::invalid_argument("trainer: batch size exceeds buffer capacity");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("trainer: gamma outside [0, 1]");
  if (exploration.horizon < 1) throw std::invalid_argument("trainer: exploration horizon must be >= 1");
  agent.validate();
}

double episode_reward(const data::QueryDocSet& item, const agent::JointAction& actions,
                      const metrics::MetricConfig& config) {
  return metrics::alpha_ndcg(ranker::sort_by_scores(actions), item.judgments, config);
}

double one_step_target(const EpisodeTuple& tuple) { return tuple.reward; }

RolloutStats rollout_epoch(const data::Dataset& dataset, const agent::AgentParams& params,
                           const agent::ExplorationSchedule& schedule, long& step,
                           const metrics::MetricConfig& reward, ReplayBuffer& buffer,
                           std::mt19937_64& rng) {
  RolloutStats stats;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const data::QueryDocSet& item = dataset.items[i];
    const double epsilon = schedule(step);
    ranker::RankOutput out = ranker::rank(item, params, epsilon, rng);
    EpisodeTuple tuple;
    tuple.query = i;
    tuple.state = data::state_vector(item);
    tuple.degenerate = metrics::is_degenerate(item.judgments);
    tuple.reward = metrics::alpha_ndcg(out.ranking, item.judgments, reward);
    tuple.actions = std::move(out.actions);
    stats.mean_reward += tuple.reward;
    stats.degenerate += tuple.degenerate ? 1 : 0;
    ++stats.episodes;
    ++step;
    buffer.push(std::move(tuple));
  }
  if (stats.episodes > 0) stats.mean_reward /= stats.episodes;
  return stats;
}

diff::Var td_loss(diff::Graph& graph, std::span<const EpisodeTuple* const> batch,
                  const data::Dataset& dataset, const Model& model) {
  if (batch.empty()) throw std::invalid_argument("td_loss: empty batch");
  const int actions = model.agent.config.actions;
  std::vector<diff::Var> q_tot;
  Tensor targets(static_cast<Eigen::Index>(batch.size()), 1);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const EpisodeTuple& t = *batch[b];
    const data::QueryDocSet& item = dataset.items.at(t.query);
    diff::Var qvals = agent::q_values(graph, item.query, item.documents, model.agent);
    // Chosen-action values: mask the stored action of each agent, then sum
    // across actions.
    Tensor mask = Tensor::Zero(qvals.rows(), actions);
    for (std::size_t i = 0; i < t.actions.size(); ++i) {
      mask(static_cast<Eigen::Index>(i), t.actions[i] - 1) = 1.0;
    }
    diff::Var chosen = diff::matmul(diff::mul(qvals, graph.constant(std::move(mask))),
                                    graph.constant(Tensor::Ones(actions, 1)));
    q_tot.push_back(mixer::mix(graph, chosen, t.state, model.mixer));
    targets(static_cast<Eigen::Index>(b), 0) = one_step_target(t);
  }
  diff::Var prediction = diff::concat(q_tot, 0);
  const double count = static_cast<double>(batch.size());
  return diff::scale(diff::mse(prediction, graph.constant(std::move(targets))), count);
}

TdStats td_update(const ReplayBuffer& buffer, const data::Dataset& dataset, Model& model,
                  diff::Optimizer& optimizer, int batch_size, const metrics::MetricConfig& reward,
                  std::mt19937_64& rng) {
  const std::vector<const EpisodeTuple*> batch =
      buffer.sample(static_cast<std::size_t>(batch_size), rng);
  TdStats stats;
  for (const EpisodeTuple* t : batch) {
    const double recomputed = episode_reward(dataset.items.at(t->query), t->actions, reward);
    if (one_step_target(*t) != recomputed) {
      throw std::logic_error("TD target differs from the reward recomputed for query " +
                             dataset.items.at(t->query).query_id);
    }
    ++stats.target_checks;
  }
  diff::Graph graph;
  diff::Var loss = td_loss(graph, batch, dataset, model);
  graph.backward(loss);
  std::vector<diff::Parameter*> params = model.parameters();
  const std::vector<Tensor> grads = graph.grads(params);
  optimizer.step(params, grads);
  stats.loss = loss.value()(0, 0);
  return stats;
}

// ---------------------------------------------------------------------------

TrainResult train(const data::Dataset& train_set, const data::Dataset& test_set,
                  const TrainerConfig& config) {
  config.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  config.reward.validate(train_set.docs_per_query);

  const auto started = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  std::mt19937_64 rng(config.seed);
  agent::AgentConfig agent_config = config.agent;
  agent_config.embedding_dim = static_cast<int>(train_set.embedding_dim);
  TrainResult result{Model::init(agent_config, config.mixer_hidden, train_set, rng), {}, {}, 0, {}, {}};
  Model& model = result.final_model;
  result.best_model = model;
  double best_score = -1.0;

  ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
  diff::Optimizer optimizer(config.optimizer);
  long step = 0;
  long updates = 0;

  const auto greedy = [&](const data::QueryDocSet& item) {
    return ranker::rank_greedy(item, model.agent);
  };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double epsilon = config.exploration(step);
    // Every stage below checks before it writes, so on a NumericError
    // `model` is still the last good state.
    try {
      rollout_epoch(train_set, model.agent, config.exploration, step, config.reward, buffer, rng);

      double loss_sum = 0.0;
      int loss_count = 0;
      if (buffer.size() >= static_cast<std::size_t>(config.batch_size)) {
        for (int u = 0; u < config.updates_per_epoch; ++u) {
          const TdStats stats =
              td_update(buffer, train_set, model, optimizer, config.batch_size, config.reward, rng);
          loss_sum += stats.loss;
          ++loss_count;
          ++updates;
          result.target_checks += stats.target_checks;
        }
      }

      if (epoch % config.eval_every != 0 && epoch != config.epochs) continue;
      LogRecord rec;
      rec.epoch = epoch;
      rec.episodes = step;
      rec.updates = updates;
      rec.train_metric = ranker::mean_alpha_ndcg(train_set, greedy, config.reward);
      if (!test_set.empty()) {
        rec.test_metric = ranker::mean_alpha_ndcg(test_set, greedy, config.reward);
      }
      rec.loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
      rec.epsilon = epsilon;
      rec.wall_seconds = elapsed();
      result.log.push_back(rec);

      const double score = rec.test_metric.value_or(rec.train_metric);
      if (score > best_score) {
        best_score = score;
        result.best_model = model;
      }
      if (config.stop_at && rec.train_metric >= *config.stop_at) {
        result.episodes_to_target = step;
        result.seconds_to_target = rec.wall_seconds;
        break;
      }
    } catch (const NumericError& e) {
      throw TrainingDiverged(std::string("training diverged at epoch ") + std::to_string(epoch) +
                                 ": " + e.what(),
                             model);
    }
  }
  return result;
}

void write_log_jsonl(std::span<const LogRecord> log, std::ostream& out) {
  for (const LogRecord& r : log) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["episodes"] = r.episodes;
    j["updates"] = r.updates;
    j["wall_seconds"] = r.wall_seconds;
    j["train_alpha_ndcg"] = r.train_metric;
    j["test_alpha_ndcg"] = r.test_metric ? nlohmann::ordered_json(*r.test_metric) : nullptr;
    j["loss"] = r.loss;
    j["epsilon"] = r.epsilon;
    out << j.dump() << '\n';
  }
}

void write_curve(std::span<const LogRecord> log, std::ostream& out) {
  out << "epoch\tepisodes\ttrain\ttest\n";
  for (const LogRecord& r : log) {
    out << r.epoch << '\t' << r.episodes << '\t' << r.train_metric << '\t';
    if (r.test_metric) {
      out << *r.test_metric;
    } else {
      out << "nan";
    }
    out << '\n';
  }
}

}  // namespace ma4div::trainer

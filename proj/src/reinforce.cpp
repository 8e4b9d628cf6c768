#include "ma4div/reinforce.hpp"

#include "ma4div/ranker.hpp"

#include <chrono>
#include <stdexcept>
#include <string>

namespace ma4div::reinforce {

SequentialPolicy SequentialPolicy::init(const PolicyConfig& config, std::mt19937_64& rng) {
  if (config.embedding_dim < 1 || config.hidden_width < 1 || config.hidden_layers < 0) {
    throw std::invalid_argument("sequential policy: bad shape");
  }
  SequentialPolicy p;
  p.config = config;
  Eigen::Index width = 3 * config.embedding_dim;
  for (int l = 0; l < config.hidden_layers; ++l) {
    p.mlp.push_back(DenseLayer::init("policy.mlp" + std::to_string(l), width, config.hidden_width, rng));
    width = config.hidden_width;
  }
  p.mlp.push_back(DenseLayer::init("policy.mlp" + std::to_string(config.hidden_layers), width, 1, rng));
  return p;
}

std::vector<diff::Parameter*> SequentialPolicy::parameters() {
  std::vector<diff::Parameter*> out;
  for (DenseLayer& layer : mlp) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

diff::Var step_log_probs(diff::Graph& g, const data::QueryDocSet& item,
                         const std::vector<int>& remaining, const Vector& selected_mean,
                         const SequentialPolicy& policy) {
  const Eigen::Index dim = item.embedding_dim();
  const auto r = static_cast<Eigen::Index>(remaining.size());
  if (r == 0) throw std::invalid_argument("step_log_probs: no remaining documents");
  Tensor features(r, 3 * dim);
  for (Eigen::Index i = 0; i < r; ++i) {
    features.row(i) << item.query.transpose(),
        item.documents.row(remaining[static_cast<std::size_t>(i)]), selected_mean.transpose();
  }
  diff::Var x = g.constant(std::move(features));
  for (std::size_t l = 0; l + 1 < policy.mlp.size(); ++l) x = diff::relu(policy.mlp[l](g, x));
  diff::Var scores = policy.mlp.back()(g, x);  // r x 1
  return diff::log_softmax_rows(diff::transpose(scores));
}

namespace {

Vector mean_of(const data::QueryDocSet& item, const std::vector<int>& selected) {
  Vector mean = Vector::Zero(item.embedding_dim());
  if (selected.empty()) return mean;
  for (int d : selected) mean += item.documents.row(d).transpose();
  return mean / static_cast<double>(selected.size());
}

}  // namespace

metrics::RankedList rank_greedy(const data::QueryDocSet& item, const SequentialPolicy& policy) {
  const int n = static_cast<int>(item.doc_count());
  std::vector<int> remaining(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) remaining[static_cast<std::size_t>(i)] = i;
  std::vector<int> order;
  while (!remaining.empty()) {
    diff::Graph g;
    const Tensor logp = step_log_probs(g, item, remaining, mean_of(item, order), policy).value();
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < logp.cols(); ++i) {
      if (logp(0, i) > logp(0, best)) best = i;
    }
    order.push_back(remaining[static_cast<std::size_t>(best)]);
    remaining.erase(remaining.begin() + best);
  }
  return metrics::RankedList(std::move(order));
}

std::vector<double> returns_to_go(const std::vector<double>& rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    out[t] = running;
  }
  return out;
}

Episode sample_episode(diff::Graph& g, const data::QueryDocSet& item,
                       const SequentialPolicy& policy, const metrics::MetricConfig& reward,
                       double gamma, std::mt19937_64& rng, diff::Var& loss) {
  const int n = static_cast<int>(item.doc_count());
  const double ideal = metrics::ideal_alpha_dcg(item.judgments, reward);
  std::vector<int> remaining(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) remaining[static_cast<std::size_t>(i)] = i;
  std::vector<int> order;
  std::vector<diff::Var> chosen_log_probs;
  Episode episode;
  metrics::DiversityAccumulator acc(item.judgments, reward.alpha);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  while (!remaining.empty()) {
    diff::Var logp = step_log_probs(g, item, remaining, mean_of(item, order), policy);
    const Tensor& lp = logp.value();
    // Inverse-CDF draw from the softmax.
    const double u = unit(rng);
    double cdf = 0.0;
    Eigen::Index pick = lp.cols() - 1;
    for (Eigen::Index i = 0; i < lp.cols(); ++i) {
      cdf += std::exp(lp(0, i));
      if (u < cdf) {
        pick = i;
        break;
      }
    }
    Tensor onehot = Tensor::Zero(1, lp.cols());
    onehot(0, pick) = 1.0;
    chosen_log_probs.push_back(diff::sum(diff::mul(logp, g.constant(std::move(onehot)))));

    const int doc = remaining[static_cast<std::size_t>(pick)];
    const double gain = acc.push(doc);
    const bool counted = acc.position() <= reward.k && ideal > 0.0;
    episode.rewards.push_back(counted ? gain / ideal : 0.0);
    order.push_back(doc);
    remaining.erase(remaining.begin() + pick);
    ++episode.decisions;
  }

  const std::vector<double> returns = returns_to_go(episode.rewards, gamma);
  std::vector<diff::Var> terms;
  for (std::size_t t = 0; t < chosen_log_probs.size(); ++t) {
    terms.push_back(diff::scale(chosen_log_probs[t], -returns[t]));
  }
  loss = diff::sum(diff::concat(terms, 1));
  episode.ranking = metrics::RankedList(std::move(order));
  return episode;
}

void ReinforceConfig::validate() const {
  if (epochs < 1 || eval_every < 1) throw std::invalid_argument("reinforce: epochs and eval cadence must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("reinforce: gamma outside [0, 1]");
}

ReinforceResult reinforce_baseline_train(const data::Dataset& train_set,
                                         const data::Dataset& test_set,
                                         const ReinforceConfig& config) {
  config.validate();
  if (train_set.empty()) throw std::invalid_argument("reinforce: empty training set");
  config.reward.validate(train_set.docs_per_query);
  const auto started = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  std::mt19937_64 rng(config.seed);
  PolicyConfig pc = config.policy;
  pc.embedding_dim = static_cast<int>(train_set.embedding_dim);
  ReinforceResult result{SequentialPolicy::init(pc, rng), {}, {}, 0, {}, {}};
  SequentialPolicy& policy = result.final_policy;
  result.best_policy = policy;
  double best_score = -1.0;
  diff::Optimizer optimizer(config.optimizer);
  long episodes = 0;
  const auto greedy = [&](const data::QueryDocSet& item) { return rank_greedy(item, policy); };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (const data::QueryDocSet& item : train_set.items) {
      diff::Graph g;
      diff::Var loss;
      const Episode ep = sample_episode(g, item, policy, config.reward, config.gamma, rng, loss);
      result.decisions += ep.decisions;
      ++episodes;
      loss_sum += loss.value()(0, 0);
      g.backward(loss);
      std::vector<diff::Parameter*> params = policy.parameters();
      optimizer.step(params, g.grads(params));
    }

    if (epoch % config.eval_every != 0 && epoch != config.epochs) continue;
    trainer::LogRecord rec;
    rec.epoch = epoch;
    rec.episodes = episodes;
    rec.updates = episodes;
    rec.train_metric = ranker::mean_alpha_ndcg(train_set, greedy, config.reward);
    if (!test_set.empty()) rec.test_metric = ranker::mean_alpha_ndcg(test_set, greedy, config.reward);
    rec.loss = loss_sum / static_cast<double>(train_set.size());
    rec.wall_seconds = elapsed();
    result.log.push_back(rec);

    const double score = rec.test_metric.value_or(rec.train_metric);
    if (score > best_score) {
      best_score = score;
      result.best_policy = policy;
    }
    if (config.stop_at && rec.train_metric >= *config.stop_at) {
      result.episodes_to_target = episodes;
      result.seconds_to_target = rec.wall_seconds;
      break;
    }
  }
  return result;
}

}  // namespace ma4div::reinforce

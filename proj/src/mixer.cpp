#include "ma4div/mixer.hpp"

#include <stdexcept>
#include <string>

namespace ma4div::mixer {

void MixerConfig::validate() const {
  if (agents < 1 || state_dim < 1 || hidden < 1) {
    throw std::invalid_argument("mixer: agents, state dim and hidden width must be >= 1");
  }
}

MixerParams MixerParams::init(const MixerConfig& config, std::mt19937_64& rng) {
  config.validate();
  const Eigen::Index s = config.state_dim;
  const Eigen::Index h = config.hidden;
  return MixerParams{config,
                     DenseLayer::init("mixer.hyper_w1", s, h * config.agents, rng),
                     DenseLayer::init("mixer.hyper_b1", s, h, rng),
                     DenseLayer::init("mixer.hyper_w2", s, h, rng),
                     DenseLayer::init("mixer.hyper_b2", s, 1, rng)};
}

std::vector<diff::Parameter*> MixerParams::parameters() {
  std::vector<diff::Parameter*> out;
  for (DenseLayer* layer : {&hyper_w1, &hyper_b1, &hyper_w2, &hyper_b2}) {
    out.push_back(&layer->weight);
    out.push_back(&layer->bias);
  }
  return out;
}

diff::Var mix(diff::Graph& g, diff::Var chosen_q, const Vector& state, const MixerParams& params) {
  const MixerConfig& c = params.config;
  if (chosen_q.rows() != c.agents || chosen_q.cols() != 1) {
    throw ShapeError("mix: chosen values " + shape_string(chosen_q.value()) + " for " +
                     std::to_string(c.agents) + " agents");
  }
  if (state.size() != c.state_dim) {
    throw ShapeError("mix: state of length " + std::to_string(state.size()) + ", expected " +
                     std::to_string(c.state_dim));
  }
  diff::Var s = g.constant(state.transpose());
  diff::Var w1 = params.hyper_w1(g, s);
  diff::Var w2 = params.hyper_w2(g, s);
  if (c.absolute_weights) {
    w1 = diff::abs(w1);
    w2 = diff::abs(w2);
  }
  w1 = diff::reshape(w1, c.hidden, c.agents);
  diff::Var b1 = diff::reshape(params.hyper_b1(g, s), c.hidden, 1);
  diff::Var b2 = params.hyper_b2(g, s);
  diff::Var hidden = diff::elu(diff::add(diff::matmul(w1, chosen_q), b1));
  return diff::add(diff::matmul(w2, hidden), b2);
}

double mix(const Vector& chosen_q, const Vector& state, const MixerParams& params) {
  diff::Graph g;
  return mix(g, g.constant(chosen_q), state, params).value()(0, 0);
}

MonotonicityReport monotonicity_check(const MixerParams& params, int trials, std::mt19937_64& rng) {
  if (trials < 1) throw std::invalid_argument("monotonicity_check: trials must be >= 1");
  constexpr double kStep = 1e-6;
  constexpr double kTolerance = -1e-9;
  std::normal_distribution<double> normal(0.0, 1.0);
  const MixerConfig& c = params.config;
  MonotonicityReport report;
  report.trials = trials;
  for (int t = 0; t < trials; ++t) {
    Vector state(c.state_dim);
    for (Eigen::Index i = 0; i < state.size(); ++i) state[i] = normal(rng);
    Vector q(c.agents);
    for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = normal(rng);
    for (int i = 0; i < c.agents; ++i) {
      Vector up = q;
      Vector down = q;
      up[i] += kStep;
      down[i] -= kStep;
      const double derivative = (mix(up, state, params) - mix(down, state, params)) / (2 * kStep);
      ++report.checks;
      if (derivative < kTolerance) report.violations.push_back({t, i, derivative});
    }
  }
  return report;
}

bool argmax_consistency_check(const agent::AgentParams& agent_params,
                              const MixerParams& mixer_params, const data::QueryDocSet& instance) {
  const int n = static_cast<int>(instance.doc_count());
  const int actions = agent_params.config.actions;
  if (n > kMaxIgmAgents || actions > kMaxIgmActions) {
    throw std::invalid_argument("argmax_consistency_check: instance too large to enumerate (n=" +
                                std::to_string(n) + ", |A|=" + std::to_string(actions) + ")");
  }
  const Tensor qvals = agent::q_values(instance.query, instance.documents, agent_params);
  const Vector state = data::state_vector(instance);

  agent::JointAction greedy(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) greedy[static_cast<std::size_t>(i)] = agent::greedy_action(qvals.row(i));

  // Odometer over joint actions; the last agent varies fastest, so the
  // enumeration is lexicographic.
  agent::JointAction joint(static_cast<std::size_t>(n), 1);
  agent::JointAction best;
  double best_value = 0.0;
  for (;;) {
    Vector chosen(n);
    for (int i = 0; i < n; ++i) chosen[i] = qvals(i, joint[static_cast<std::size_t>(i)] - 1);
    const double value = mix(chosen, state, mixer_params);
    if (best.empty() || value > best_value) {
      best = joint;
      best_value = value;
    }
    int pos = n - 1;
    while (pos >= 0 && joint[static_cast<std::size_t>(pos)] == actions) {
      joint[static_cast<std::size_t>(pos)] = 1;
      --pos;
    }
    if (pos < 0) break;
    ++joint[static_cast<std::size_t>(pos)];
  }
  return best == greedy;
}

}  // namespace ma4div::mixer

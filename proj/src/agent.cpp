#include "ma4div/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ma4div::agent {

void AgentConfig::validate() const {
  if (embedding_dim < 1) throw std::invalid_argument("agent: embedding dim must be >= 1");
  if (heads < 1 || attention_dim < heads || attention_dim % heads != 0) {
    throw std::invalid_argument("agent: attention dim " + std::to_string(attention_dim) +
                                " must be a positive multiple of heads " + std::to_string(heads));
  }
  if (blocks < 1) throw std::invalid_argument("agent: need at least one attention block");
  if (residual && embedding_dim != attention_dim) {
    throw std::invalid_argument("agent: residual attention needs embedding dim == attention dim");
  }
  if (hidden_width < 1 || hidden_layers < 0) throw std::invalid_argument("agent: bad MLP shape");
  if (actions < 2) throw std::invalid_argument("agent: action space needs at least 2 scores");
}

AgentParams AgentParams::init(const AgentConfig& config, std::mt19937_64& rng) {
  config.validate();
  AgentParams p;
  p.config = config;
  const Eigen::Index z = config.attention_dim;
  for (int b = 0; b < config.blocks; ++b) {
    const Eigen::Index in = b == 0 ? config.embedding_dim : z;
    const std::string name = "agent.attn" + std::to_string(b);
    p.attention.push_back({diff::glorot(name + ".w_query", in, z, rng),
                           diff::glorot(name + ".w_key", in, z, rng),
                           diff::glorot(name + ".w_value", in, z, rng),
                           diff::glorot(name + ".w_out", z, z, rng)});
  }
  Eigen::Index width = 2 * config.embedding_dim + z;
  for (int l = 0; l < config.hidden_layers; ++l) {
    p.head.push_back(DenseLayer::init("agent.mlp" + std::to_string(l), width,
                                      config.hidden_width, rng));
    width = config.hidden_width;
  }
  p.head.push_back(
      DenseLayer::init("agent.mlp" + std::to_string(config.hidden_layers), width, config.actions, rng));
  return p;
}

std::vector<diff::Parameter*> AgentParams::parameters() {
  std::vector<diff::Parameter*> out;
  for (AttentionBlock& b : attention) {
    for (diff::Parameter* p : {&b.w_query, &b.w_key, &b.w_value, &b.w_out}) out.push_back(p);
  }
  for (DenseLayer& layer : head) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

diff::Var cross_features(diff::Graph& g, diff::Var documents, const AgentParams& params) {
  const AgentConfig& c = params.config;
  const Eigen::Index dk = c.head_dim();
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  diff::Var x = documents;
  for (const AttentionBlock& block : params.attention) {
    if (x.cols() != block.w_query.value.rows()) {
      throw ShapeError("cross_features: input " + shape_string(x.value()) +
                       " does not match projection " + shape_string(block.w_query.value));
    }
    diff::Var queries = diff::matmul(x, g.parameter(block.w_query));
    diff::Var keys = diff::matmul(x, g.parameter(block.w_key));
    diff::Var values = diff::matmul(x, g.parameter(block.w_value));
    std::vector<diff::Var> heads;
    heads.reserve(static_cast<std::size_t>(c.heads));
    for (int h = 0; h < c.heads; ++h) {
      diff::Var qh = diff::slice_cols(queries, h * dk, dk);
      diff::Var kh = diff::slice_cols(keys, h * dk, dk);
      diff::Var vh = diff::slice_cols(values, h * dk, dk);
      diff::Var scores = diff::scale(diff::matmul(qh, diff::transpose(kh)), inv_sqrt_dk);
      heads.push_back(diff::matmul(diff::softmax_rows(scores), vh));
    }
    diff::Var out = diff::matmul(diff::concat(heads, 1), g.parameter(block.w_out));
    x = c.residual ? diff::add(x, out) : out;
  }
  return x;
}

Tensor cross_features(const Tensor& documents, const AgentParams& params) {
  diff::Graph g;
  return cross_features(g, g.constant(documents), params).value();
}

diff::Var q_values(diff::Graph& g, const Vector& query, const Tensor& documents,
                   const AgentParams& params) {
  const AgentConfig& c = params.config;
  if (query.size() != c.embedding_dim || documents.cols() != c.embedding_dim) {
    throw ShapeError("q_values: query of length " + std::to_string(query.size()) +
                     " and documents " + shape_string(documents) + " for embedding dim " +
                     std::to_string(c.embedding_dim));
  }
  if (documents.rows() < 1) throw ShapeError("q_values: no documents");
  diff::Var docs = g.constant(documents);
  diff::Var queries = g.constant(query.transpose().replicate(documents.rows(), 1));
  diff::Var features = cross_features(g, docs, params);
  const diff::Var parts[] = {queries, docs, features};
  diff::Var x = diff::concat(parts, 1);
  for (std::size_t l = 0; l + 1 < params.head.size(); ++l) x = diff::relu(params.head[l](g, x));
  return params.head.back()(g, x);
}

Tensor q_values(const Vector& query, const Tensor& documents, const AgentParams& params) {
  diff::Graph g;
  return q_values(g, query, documents, params).value();
}

int greedy_action(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index a = 1; a < row.size(); ++a) {
    if (row[a] > row[best]) best = a;
  }
  return static_cast<int>(best) + 1;
}

JointAction select_actions(const Tensor& qvals, double epsilon, std::mt19937_64& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("select_actions: epsilon must lie in [0, 1]");
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> any_action(1, static_cast<int>(qvals.cols()));
  JointAction actions(static_cast<std::size_t>(qvals.rows()));
  for (Eigen::Index i = 0; i < qvals.rows(); ++i) {
    actions[static_cast<std::size_t>(i)] =
        coin(rng) < epsilon ? any_action(rng) : greedy_action(qvals.row(i));
  }
  return actions;
}

double ExplorationSchedule::operator()(long t) const {
  if (horizon < 1) throw std::invalid_argument("exploration horizon must be >= 1");
  const double h = static_cast<double>(horizon);
  return std::max(floor, (start * h - static_cast<double>(t)) / h);
}

}  // namespace ma4div::agent

#include "ma4div/trainer.hpp"

#include "ma4div/ranker.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

namespace {

using namespace ma4div;
using trainer::EpisodeTuple;
using trainer::ReplayBuffer;

data::Dataset two_doc_dataset() {
  data::QueryDocSet item;
  item.query_id = "q";
  item.query = Vector::Ones(3);
  item.documents = Tensor(2, 3);
  item.documents << 1, 0, 0, 0, 1, 0;
  item.judgments = Judgments(2, 1);
  item.judgments << 1, 0;
  return data::make_dataset({item});
}

data::Dataset synthetic(int queries, std::uint64_t seed = 3) {
  data::GeneratorConfig g;
  g.queries = queries;
  g.docs_per_query = 5;
  g.subtopics = 4;
  g.embedding_dim = 6;
  g.coverage_rate = 0.3;
  g.seed = seed;
  return data::generate(g);
}

agent::AgentConfig small_agent(int dim = 6, int actions = 4) {
  agent::AgentConfig c;
  c.embedding_dim = dim;
  c.attention_dim = 8;
  c.heads = 2;
  c.hidden_width = 12;
  c.actions = actions;
  return c;
}

trainer::TrainerConfig small_config() {
  trainer::TrainerConfig c;
  c.epochs = 6;
  c.updates_per_epoch = 2;
  c.batch_size = 4;
  c.buffer_capacity = 50;
  c.reward = {0.5, 5};
  c.exploration = {1.0, 0.05, 40};
  c.agent = small_agent();
  c.mixer_hidden = 4;
  c.optimizer.learning_rate = 1e-3;
  return c;
}

EpisodeTuple tuple_for(std::size_t query, double reward) {
  EpisodeTuple t;
  t.query = query;
  t.reward = reward;
  return t;
}

TEST(Replay, FifoEvictsOldest) {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) buf.push(tuple_for(static_cast<std::size_t>(i), 0.0));
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.inserted(), 5u);
  EXPECT_EQ(buf[0].query, 2u);
  EXPECT_EQ(buf[2].query, 4u);
  EXPECT_THROW(buf[3], std::out_of_range);
  EXPECT_THROW(ReplayBuffer(0), std::invalid_argument);
}

TEST(Replay, SampleIsWithoutReplacementAndChecksSize) {
  ReplayBuffer buf(10);
  for (int i = 0; i < 10; ++i) buf.push(tuple_for(static_cast<std::size_t>(i), 0.0));
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    std::set<std::size_t> seen;
    for (const EpisodeTuple* e : buf.sample(6, rng)) seen.insert(e->query);
    EXPECT_EQ(seen.size(), 6u);
  }
  EXPECT_THROW(buf.sample(11, rng), std::invalid_argument);
}

TEST(Reward, IsAlphaNdcgOfInducedRanking) {
  const data::Dataset ds = two_doc_dataset();
  const metrics::MetricConfig c{0.5, 2};
  EXPECT_DOUBLE_EQ(trainer::episode_reward(ds.items[0], {2, 1}, c), 1.0);
  EXPECT_NEAR(trainer::episode_reward(ds.items[0], {1, 2}, c), 1.0 / std::log2(3.0), 1e-15);
  EXPECT_DOUBLE_EQ(trainer::episode_reward(ds.items[0], {1, 1}, c), 1.0);
}

TEST(TdLoss, HandValue) {
  const data::Dataset ds = two_doc_dataset();
  std::mt19937_64 rng(2);
  trainer::Model model = trainer::Model::init(small_agent(3, 3), 4, ds, rng);
  for (diff::Parameter* p : model.mixer.parameters()) p->value.setZero();
  model.mixer.hyper_b2.bias.value.setConstant(0.6);
  EpisodeTuple t = tuple_for(0, 1.0);
  t.actions = {2, 1};
  t.state = data::state_vector(ds.items[0]);
  const EpisodeTuple* batch[] = {&t};
  diff::Graph g;
  EXPECT_NEAR(trainer::td_loss(g, batch, ds, model).value()(0, 0), 0.16, 1e-15);
}

TEST(TdLoss, IsSumOfSquaredErrorsOverBatch) {
  const data::Dataset ds = synthetic(4);
  std::mt19937_64 rng(3);
  trainer::Model model = trainer::Model::init(small_agent(), 4, ds, rng);
  std::vector<EpisodeTuple> tuples;
  for (std::size_t i = 0; i < 4; ++i) {
    EpisodeTuple t = tuple_for(i, 0.1 * static_cast<double>(i));
    t.actions = {1, 2, 3, 4, 1};
    t.state = data::state_vector(ds.items[i]);
    tuples.push_back(t);
  }
  std::vector<const EpisodeTuple*> batch;
  double expected = 0.0;
  for (const EpisodeTuple& t : tuples) {
    batch.push_back(&t);
    const data::QueryDocSet& item = ds.items[t.query];
    const Tensor q = agent::q_values(item.query, item.documents, model.agent);
    Vector chosen(5);
    for (int i = 0; i < 5; ++i) chosen[i] = q(i, t.actions[static_cast<std::size_t>(i)] - 1);
    const double err = t.reward - mixer::mix(chosen, t.state, model.mixer);
    expected += err * err;
  }
  diff::Graph g;
  EXPECT_NEAR(trainer::td_loss(g, batch, ds, model).value()(0, 0), expected, 1e-12);
}

TEST(TdLoss, GradientMatchesFiniteDifferences) {
  const data::Dataset ds = synthetic(3);
  std::mt19937_64 rng(4);
  agent::AgentConfig ac = small_agent();
  ac.hidden_width = 6;
  trainer::Model model = trainer::Model::init(ac, 3, ds, rng);
  // Zero biases can leave ReLU inputs exactly on the kink.
  for (diff::Parameter* p : model.parameters()) {
    if (p->value.rows() == 1) p->value = oracle::random_tensor(1, p->value.cols(), rng, 0.3);
  }
  std::vector<EpisodeTuple> tuples;
  for (std::size_t i = 0; i < 3; ++i) {
    EpisodeTuple t = tuple_for(i, 0.5);
    t.actions = {4, 3, 2, 1, 2};
    t.state = data::state_vector(ds.items[i]);
    tuples.push_back(t);
  }
  std::vector<const EpisodeTuple*> batch;
  for (const EpisodeTuple& t : tuples) batch.push_back(&t);
  const double err = oracle::gradient_check(model.parameters(), [&](diff::Graph& g) {
    return trainer::td_loss(g, batch, ds, model);
  });
  EXPECT_LT(err, 1e-4);
}

TEST(TdUpdate, RejectsTamperedTarget) {
  const data::Dataset ds = synthetic(4);
  std::mt19937_64 rng(5);
  trainer::Model model = trainer::Model::init(small_agent(), 4, ds, rng);
  ReplayBuffer buf(10);
  long step = 0;
  trainer::rollout_epoch(ds, model.agent, {1.0, 0.05, 10}, step, {0.5, 5}, buf, rng);
  EXPECT_EQ(step, 4);
  diff::Optimizer opt({});
  const auto ok = trainer::td_update(buf, ds, model, opt, 4, {0.5, 5}, rng);
  EXPECT_EQ(ok.target_checks, 4);

  ReplayBuffer tampered(4);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    EpisodeTuple t = buf[i];
    if (i == 2) t.reward += 1e-12;
    tampered.push(t);
  }
  EXPECT_THROW(trainer::td_update(tampered, ds, model, opt, 4, {0.5, 5}, rng), std::logic_error);
}

TEST(Rollout, StoresEpisodesInOrderWithCorrectRewards) {
  const data::Dataset ds = synthetic(6);
  std::mt19937_64 rng(6);
  trainer::Model model = trainer::Model::init(small_agent(), 4, ds, rng);
  ReplayBuffer buf(100);
  long step = 10;
  const auto stats = trainer::rollout_epoch(ds, model.agent, {1.0, 0.05, 20}, step, {0.5, 5}, buf, rng);
  EXPECT_EQ(stats.episodes, 6);
  EXPECT_EQ(step, 16);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    EXPECT_EQ(buf[i].query, i);
    EXPECT_EQ(buf[i].reward, trainer::episode_reward(ds.items[i], buf[i].actions, {0.5, 5}));
    EXPECT_EQ(buf[i].state, data::state_vector(ds.items[i]));
  }
}

TEST(Config, Validation) {
  trainer::TrainerConfig c = small_config();
  c.batch_size = 100;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.epochs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  const trainer::TrainerConfig d;
  EXPECT_EQ(d.updates_per_epoch, 8);
  EXPECT_EQ(d.batch_size, 32);
  EXPECT_EQ(d.buffer_capacity, 5000);
  EXPECT_EQ(d.agent.actions, 10);
}

TEST(Train, DeterministicLogsAndModels) {
  const data::Dataset ds = synthetic(12);
  const auto [tr, te] = data::split(ds, 0.75, 1);
  const auto a = trainer::train(tr, te, small_config());
  const auto b = trainer::train(tr, te, small_config());
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].train_metric, b.log[i].train_metric);
    EXPECT_EQ(a.log[i].test_metric, b.log[i].test_metric);
    EXPECT_EQ(a.log[i].loss, b.log[i].loss);
    EXPECT_EQ(a.log[i].episodes, static_cast<long>((i + 1) * tr.size()));
  }
  trainer::Model ma = a.final_model, mb = b.final_model;
  const auto pa = ma.parameters();
  const auto pb = mb.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
  EXPECT_GT(a.target_checks, 0);
}

TEST(Train, StopsAtThreshold) {
  const data::Dataset ds = synthetic(8);
  trainer::TrainerConfig c = small_config();
  c.stop_at = 0.0;
  const auto r = trainer::train(ds, {}, c);
  ASSERT_TRUE(r.episodes_to_target.has_value());
  EXPECT_EQ(*r.episodes_to_target, 8);
  EXPECT_EQ(r.log.size(), 1u);
}

TEST(Train, DivergenceReportsLastGoodModel) {
  const data::Dataset ds = synthetic(8);
  trainer::TrainerConfig c = small_config();
  c.epochs = 200;
  c.optimizer = {diff::Method::GradientDescent, 1e150};
  try {
    trainer::train(ds, {}, c);
    FAIL() << "expected divergence";
  } catch (const trainer::TrainingDiverged& e) {
    trainer::Model last = e.last_good();
    for (diff::Parameter* p : last.parameters()) EXPECT_TRUE(all_finite(p->value)) << p->name;
  }
}

TEST(Logs, JsonlAndCurveFormats) {
  trainer::LogRecord r;
  r.epoch = 1;
  r.train_metric = 0.5;
  std::ostringstream json, curve;
  trainer::write_log_jsonl(std::span<const trainer::LogRecord>(&r, 1), json);
  trainer::write_curve(std::span<const trainer::LogRecord>(&r, 1), curve);
  EXPECT_NE(json.str().find("\"test_alpha_ndcg\":null"), std::string::npos);
  EXPECT_EQ(curve.str(), "epoch\tepisodes\ttrain\ttest\n1\t0\t0.5\tnan\n");
}

}  // namespace

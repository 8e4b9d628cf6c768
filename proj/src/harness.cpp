#include "ma4div/harness.hpp"

#include "ma4div/baselines.hpp"
#include "ma4div/checkpoint.hpp"
#include "ma4div/ranker.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ma4div::harness {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

const std::map<std::string, Method>& method_table() {
  static const std::map<std::string, Method> table{
      {"ma4div", Method::Ma4div}, {"mdpdiv", Method::MdpDiv}, {"mmr", Method::Mmr},
      {"xquad", Method::Xquad},   {"random", Method::Random}, {"oracle", Method::Oracle}};
  return table;
}

bool is_learned(Method m) { return m == Method::Ma4div || m == Method::MdpDiv; }

// Reads the keys of one config object. Each take() consumes a key; finish()
// rejects whatever is left over.
class Section {
 public:
  Section(const json& j, std::string path) : path_(std::move(path)) {
    if (!j.is_object()) throw std::invalid_argument("config: '" + path_ + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) left_.emplace(it.key(), it.value());
  }

  template <typename T>
  void take(const char* key, T& field) {
    auto it = left_.find(key);
    if (it == left_.end()) return;
    try {
      field = it->second.get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument("config: bad value for '" + qualified(key) + "'");
    }
    left_.erase(it);
  }

  std::optional<json> sub(const char* key) {
    auto it = left_.find(key);
    if (it == left_.end()) return std::nullopt;
    json out = it->second;
    left_.erase(it);
    return out;
  }

  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    if (!left_.empty()) {
      throw std::invalid_argument("config: unknown key '" + qualified(left_.begin()->first) + "'");
    }
  }

 private:
  std::string path_;
  std::map<std::string, json> left_;
};

std::string optimizer_name(diff::Method m) {
  return m == diff::Method::Adam ? "adam" : "sgd";
}

diff::Method parse_optimizer(const std::string& name) {
  if (name == "adam") return diff::Method::Adam;
  if (name == "sgd") return diff::Method::GradientDescent;
  throw std::invalid_argument("config: unknown optimizer '" + name + "' (adam, sgd)");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void prepare_out(const RunConfig& config) {
  fs::create_directories(config.out);
  write_text(config.out / "run_config.json", to_json(config).dump(2) + "\n");
}

data::Dataset require_dataset(const RunConfig& config) {
  if (!config.dataset) throw std::invalid_argument(config.command + ": --dataset is required");
  return data::load(*config.dataset);
}

trainer::TrainerConfig effective_trainer(const RunConfig& config) {
  trainer::TrainerConfig t = config.trainer;
  t.seed = config.seed;
  t.reward = config.metric;
  return t;
}

data::GeneratorConfig effective_generator(const RunConfig& config) {
  data::GeneratorConfig g = config.generator;
  g.seed = config.seed;
  return g;
}

struct Splits {
  data::Dataset train;
  data::Dataset test;
  /// Test split when it is non-empty, the training split otherwise.
  const data::Dataset& eval() const { return test.empty() ? train : test; }
};

Splits split_dataset(const data::Dataset& dataset, const RunConfig& config) {
  if (config.train_fraction == 1.0) {
    data::Dataset none = dataset;
    none.items.clear();
    return Splits{dataset, std::move(none)};
  }
  auto [train, test] = data::split(dataset, config.train_fraction, config.seed);
  return Splits{std::move(train), std::move(test)};
}

trainer::Model blank_model(const RunConfig& config, const data::Dataset& shape) {
  std::mt19937_64 rng(config.seed);
  agent::AgentConfig ac = config.trainer.agent;
  ac.embedding_dim = static_cast<int>(shape.embedding_dim);
  return trainer::Model::init(ac, config.trainer.mixer_hidden, shape, rng);
}

reinforce::SequentialPolicy blank_policy(const RunConfig& config, const data::Dataset& shape) {
  std::mt19937_64 rng(config.seed);
  reinforce::PolicyConfig pc = reinforce_config(config).policy;
  pc.embedding_dim = static_cast<int>(shape.embedding_dim);
  return reinforce::SequentialPolicy::init(pc, rng);
}

double tune_lambda(const data::Dataset& train, const metrics::MetricConfig& metric,
                   metrics::RankedList (*rank)(const data::QueryDocSet&,
                                               const baselines::GreedyConfig&)) {
  double best_lambda = 0.5;
  double best = -1.0;
  for (double lambda : baselines::lambda_grid()) {
    const baselines::GreedyConfig gc{lambda};
    const double score = ranker::mean_alpha_ndcg(
        train, [&](const data::QueryDocSet& item) { return rank(item, gc); }, metric);
    if (score > best) {
      best = score;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

void write_tables(const fs::path& stem, const std::vector<ranker::EvaluationReport>& rows) {
  std::ostringstream jsonl;
  ranker::write_table_jsonl(rows, jsonl);
  write_text(stem.string() + ".jsonl", jsonl.str());
  std::ostringstream text;
  ranker::write_table_text(rows, text);
  write_text(stem.string() + ".txt", text.str());
}

template <typename F>
double seconds(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

Method parse_method(const std::string& name) {
  const auto& table = method_table();
  auto it = table.find(name);
  if (it == table.end()) {
    throw std::invalid_argument("unknown method '" + name +
                                "' (ma4div, mdpdiv, mmr, xquad, random, oracle)");
  }
  return it->second;
}

std::string method_name(Method method) {
  for (const auto& [name, m] : method_table()) {
    if (m == method) return name;
  }
  throw std::logic_error("unnamed method");
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["command"] = c.command;
  j["seed"] = c.seed;
  j["out"] = c.out.string();
  j["dataset"] = c.dataset ? ordered_json(c.dataset->string()) : ordered_json(nullptr);
  j["checkpoint"] = c.checkpoint ? ordered_json(c.checkpoint->string()) : ordered_json(nullptr);
  ordered_json methods = ordered_json::array();
  for (Method m : c.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  j["metric"] = {{"alpha", c.metric.alpha}, {"k", c.metric.k}};
  j["train_fraction"] = c.train_fraction;

  const data::GeneratorConfig& g = c.generator;
  j["generator"] = {{"queries", g.queries},
                    {"docs_per_query", g.docs_per_query},
                    {"subtopics", g.subtopics},
                    {"embedding_dim", g.embedding_dim},
                    {"coverage_rate", g.coverage_rate},
                    {"signal_strength", g.signal_strength}};

  const trainer::TrainerConfig& t = c.trainer;
  const agent::AgentConfig& a = t.agent;
  j["trainer"] = {
      {"epochs", t.epochs},
      {"updates_per_epoch", t.updates_per_epoch},
      {"batch_size", t.batch_size},
      {"buffer_capacity", t.buffer_capacity},
      {"gamma", t.gamma},
      {"exploration",
       {{"start", t.exploration.start},
        {"floor", t.exploration.floor},
        {"horizon", t.exploration.horizon}}},
      {"optimizer",
       {{"method", optimizer_name(t.optimizer.method)},
        {"learning_rate", t.optimizer.learning_rate},
        {"beta1", t.optimizer.beta1},
        {"beta2", t.optimizer.beta2},
        {"epsilon", t.optimizer.epsilon}}},
      {"agent",
       {{"attention_dim", a.attention_dim},
        {"heads", a.heads},
        {"blocks", a.blocks},
        {"residual", a.residual},
        {"hidden_width", a.hidden_width},
        {"hidden_layers", a.hidden_layers},
        {"actions", a.actions}}},
      {"mixer_hidden", t.mixer_hidden},
      {"eval_every", t.eval_every}};

  const BenchConfig& b = c.bench;
  j["bench"] = {{"threshold_fraction", b.threshold_fraction},
                {"latency_sizes", b.latency_sizes},
                {"latency_queries", b.latency_queries},
                {"latency_repeats", b.latency_repeats}};
  return j;
}

RunConfig merge(RunConfig c, const json& j) {
  Section top(j, "");
  top.take("command", c.command);
  top.take("seed", c.seed);
  if (auto v = top.sub("out")) c.out = v->get<std::string>();
  if (auto v = top.sub("dataset")) {
    c.dataset = v->is_null() ? std::nullopt : std::optional<fs::path>(v->get<std::string>());
  }
  if (auto v = top.sub("checkpoint")) {
    c.checkpoint = v->is_null() ? std::nullopt : std::optional<fs::path>(v->get<std::string>());
  }
  if (auto v = top.sub("methods")) {
    if (!v->is_array()) throw std::invalid_argument("config: 'methods' must be an array");
    c.methods.clear();
    for (const json& m : *v) c.methods.push_back(parse_method(m.get<std::string>()));
  }
  if (auto v = top.sub("metric")) {
    Section s(*v, "metric");
    s.take("alpha", c.metric.alpha);
    s.take("k", c.metric.k);
    s.finish();
  }
  top.take("train_fraction", c.train_fraction);
  if (auto v = top.sub("generator")) {
    Section s(*v, "generator");
    data::GeneratorConfig& g = c.generator;
    s.take("queries", g.queries);
    s.take("docs_per_query", g.docs_per_query);
    s.take("subtopics", g.subtopics);
    s.take("embedding_dim", g.embedding_dim);
    s.take("coverage_rate", g.coverage_rate);
    s.take("signal_strength", g.signal_strength);
    s.finish();
  }
  if (auto v = top.sub("trainer")) {
    Section s(*v, "trainer");
    trainer::TrainerConfig& t = c.trainer;
    s.take("epochs", t.epochs);
    s.take("updates_per_epoch", t.updates_per_epoch);
    s.take("batch_size", t.batch_size);
    s.take("buffer_capacity", t.buffer_capacity);
    s.take("gamma", t.gamma);
    if (auto e = s.sub("exploration")) {
      Section se(*e, "trainer.exploration");
      se.take("start", t.exploration.start);
      se.take("floor", t.exploration.floor);
      se.take("horizon", t.exploration.horizon);
      se.finish();
    }
    if (auto o = s.sub("optimizer")) {
      Section so(*o, "trainer.optimizer");
      std::string method = optimizer_name(t.optimizer.method);
      so.take("method", method);
      t.optimizer.method = parse_optimizer(method);
      so.take("learning_rate", t.optimizer.learning_rate);
      so.take("beta1", t.optimizer.beta1);
      so.take("beta2", t.optimizer.beta2);
      so.take("epsilon", t.optimizer.epsilon);
      so.finish();
    }
    if (auto a = s.sub("agent")) {
      Section sa(*a, "trainer.agent");
      sa.take("attention_dim", t.agent.attention_dim);
      sa.take("heads", t.agent.heads);
      sa.take("blocks", t.agent.blocks);
      sa.take("residual", t.agent.residual);
      sa.take("hidden_width", t.agent.hidden_width);
      sa.take("hidden_layers", t.agent.hidden_layers);
      sa.take("actions", t.agent.actions);
      sa.finish();
    }
    s.take("mixer_hidden", t.mixer_hidden);
    s.take("eval_every", t.eval_every);
    s.finish();
  }
  if (auto v = top.sub("bench")) {
    Section s(*v, "bench");
    s.take("threshold_fraction", c.bench.threshold_fraction);
    s.take("latency_sizes", c.bench.latency_sizes);
    s.take("latency_queries", c.bench.latency_queries);
    s.take("latency_repeats", c.bench.latency_repeats);
    s.finish();
  }
  top.finish();
  return c;
}

RunConfig merge_file(RunConfig base, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return merge(std::move(base), j);
}

reinforce::ReinforceConfig reinforce_config(const RunConfig& config) {
  reinforce::ReinforceConfig r;
  const trainer::TrainerConfig& t = config.trainer;
  r.epochs = t.epochs;
  r.reward = config.metric;
  r.optimizer = t.optimizer;
  r.policy.hidden_width = t.agent.hidden_width;
  r.policy.hidden_layers = t.agent.hidden_layers;
  r.eval_every = t.eval_every;
  r.seed = config.seed;
  return r;
}

void cmd_generate(const RunConfig& config) {
  const data::Dataset dataset = data::generate(effective_generator(config));
  prepare_out(config);
  data::save(dataset, config.out / "dataset.jsonl");
}

void cmd_train(const RunConfig& config) {
  if (config.methods.size() != 1 || !is_learned(config.methods.front())) {
    throw std::invalid_argument("train: --method must be exactly one of ma4div, mdpdiv");
  }
  const data::Dataset dataset = require_dataset(config);
  config.metric.validate(dataset.docs_per_query);
  const Splits splits = split_dataset(dataset, config);
  prepare_out(config);

  std::vector<trainer::LogRecord> log;
  std::vector<checkpoint::NamedTensor> tensors;
  ranker::RankingPolicy policy;
  trainer::Model model;
  reinforce::SequentialPolicy sequential;
  const Method method = config.methods.front();
  if (method == Method::Ma4div) {
    trainer::TrainResult result;
    try {
      result = trainer::train(splits.train, splits.test, effective_trainer(config));
    } catch (const trainer::TrainingDiverged& e) {
      trainer::Model last_good = e.last_good();
      checkpoint::save(config.out / "checkpoint.bin", checkpoint::snapshot(last_good.parameters()));
      throw;
    }
    log = std::move(result.log);
    model = std::move(result.best_model);
    tensors = checkpoint::snapshot(model.parameters());
    policy = [&](const data::QueryDocSet& item) { return ranker::rank_greedy(item, model.agent); };
  } else {
    reinforce::ReinforceResult result =
        reinforce::reinforce_baseline_train(splits.train, splits.test, reinforce_config(config));
    log = std::move(result.log);
    sequential = std::move(result.best_policy);
    tensors = checkpoint::snapshot(sequential.parameters());
    policy = [&](const data::QueryDocSet& item) {
      return reinforce::rank_greedy(item, sequential);
    };
  }

  checkpoint::save(config.out / "checkpoint.bin", tensors);
  std::ostringstream log_text;
  trainer::write_log_jsonl(log, log_text);
  write_text(config.out / "train_log.jsonl", log_text.str());
  std::ostringstream curve;
  trainer::write_curve(log, curve);
  write_text(config.out / "curve.tsv", curve.str());
  write_tables(config.out / "evaluation",
               {ranker::evaluate_rankings(splits.eval(), policy, config.metric.alpha,
                                          method_name(method))});
}

void cmd_evaluate(const RunConfig& config) {
  if (config.methods.empty()) throw std::invalid_argument("evaluate: no method given");
  const data::Dataset dataset = require_dataset(config);
  config.metric.validate(dataset.docs_per_query);
  const bool needs_checkpoint = std::any_of(config.methods.begin(), config.methods.end(), is_learned);
  std::vector<checkpoint::NamedTensor> tensors;
  if (needs_checkpoint) {
    if (!config.checkpoint) throw std::invalid_argument("evaluate: --checkpoint is required for learned methods");
    tensors = checkpoint::load(*config.checkpoint);
  }
  const Splits splits = split_dataset(dataset, config);
  prepare_out(config);

  std::vector<ranker::EvaluationReport> rows;
  for (Method method : config.methods) {
    const std::string name = method_name(method);
    ranker::EvaluationReport row;
    switch (method) {
      case Method::Ma4div: {
        trainer::Model model = blank_model(config, dataset);
        checkpoint::restore(tensors, model.parameters());
        row = ranker::evaluate_rankings(
            splits.eval(),
            [&](const data::QueryDocSet& item) { return ranker::rank_greedy(item, model.agent); },
            config.metric.alpha, name);
        break;
      }
      case Method::MdpDiv: {
        reinforce::SequentialPolicy policy = blank_policy(config, dataset);
        checkpoint::restore(tensors, policy.parameters());
        row = ranker::evaluate_rankings(
            splits.eval(),
            [&](const data::QueryDocSet& item) { return reinforce::rank_greedy(item, policy); },
            config.metric.alpha, name);
        break;
      }
      case Method::Mmr:
      case Method::Xquad: {
        const auto fn = method == Method::Mmr ? &baselines::mmr_rank : &baselines::xquad_rank;
        const baselines::GreedyConfig gc{tune_lambda(splits.train, config.metric, fn)};
        row = ranker::evaluate_rankings(
            splits.eval(), [&](const data::QueryDocSet& item) { return fn(item, gc); },
            config.metric.alpha, name);
        break;
      }
      case Method::Random: {
        std::mt19937_64 rng(config.seed);
        row = ranker::evaluate_rankings(
            splits.eval(),
            [&](const data::QueryDocSet& item) { return baselines::random_rank(item, rng); },
            config.metric.alpha, name);
        break;
      }
      case Method::Oracle:
        row = ranker::evaluate_rankings(
            splits.eval(),
            [&](const data::QueryDocSet& item) {
              return baselines::oracle_greedy_rank(item, config.metric);
            },
            config.metric.alpha, name);
        break;
    }
    rows.push_back(row);
  }
  write_tables(config.out / "evaluation", rows);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 paired points");
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = x[static_cast<std::size_t>(i)];
    target[i] = y[static_cast<std::size_t>(i)];
  }
  if ((design.col(1).array() == design(0, 1)).all()) {
    throw std::invalid_argument("fit_line: x values are all equal");
  }
  const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(target);
  return LineFit{beta[0], beta[1]};
}

void cmd_bench(const RunConfig& config) {
  if (config.methods.empty()) throw std::invalid_argument("bench: no method given");
  const BenchConfig& b = config.bench;
  if (!(b.threshold_fraction > 0.0 && b.threshold_fraction <= 1.0)) {
    throw std::invalid_argument("bench: threshold_fraction outside (0, 1]");
  }
  if (b.latency_queries < 1 || b.latency_repeats < 1) {
    throw std::invalid_argument("bench: latency queries and repeats must be >= 1");
  }
  const data::Dataset dataset =
      config.dataset ? data::load(*config.dataset) : data::generate(effective_generator(config));
  config.metric.validate(dataset.docs_per_query);
  const Splits splits = split_dataset(dataset, config);
  prepare_out(config);

  const double oracle = ranker::mean_alpha_ndcg(
      splits.train,
      [&](const data::QueryDocSet& item) { return baselines::oracle_greedy_rank(item, config.metric); },
      config.metric);
  const double threshold = b.threshold_fraction * oracle;

  std::vector<ordered_json> records;
  std::ostringstream text;
  text << std::fixed << std::setprecision(4);
  text << "threshold " << threshold << " (" << b.threshold_fraction << " x oracle " << oracle
       << ")\n\n";
  text << std::left << std::setw(10) << "method" << std::right << std::setw(12) << "episodes"
       << std::setw(12) << "seconds" << std::setw(12) << "total_s" << std::setw(12) << "decisions"
       << std::setw(10) << "final" << '\n';

  for (Method method : config.methods) {
    if (!is_learned(method)) continue;
    std::optional<long> episodes;
    std::optional<double> secs;
    double final_metric = 0.0;
    long decisions = 0;
    const double total = seconds([&] {
      if (method == Method::Ma4div) {
        trainer::TrainerConfig t = effective_trainer(config);
        t.stop_at = threshold;
        const trainer::TrainResult r = trainer::train(splits.train, data::Dataset{}, t);
        episodes = r.episodes_to_target;
        secs = r.seconds_to_target;
        final_metric = r.log.back().train_metric;
        decisions = r.log.back().episodes;
      } else {
        reinforce::ReinforceConfig rc = reinforce_config(config);
        rc.stop_at = threshold;
        const reinforce::ReinforceResult r =
            reinforce::reinforce_baseline_train(splits.train, data::Dataset{}, rc);
        episodes = r.episodes_to_target;
        secs = r.seconds_to_target;
        final_metric = r.log.back().train_metric;
        decisions = r.decisions;
      }
    });
    ordered_json rec;
    rec["kind"] = "training";
    rec["method"] = method_name(method);
    rec["threshold"] = threshold;
    rec["dnf"] = !episodes.has_value();
    rec["episodes_to_threshold"] = episodes ? ordered_json(*episodes) : ordered_json(nullptr);
    rec["seconds_to_threshold"] = secs ? ordered_json(*secs) : ordered_json(nullptr);
    rec["total_seconds"] = total;
    rec["policy_decisions"] = decisions;
    rec["final_train_alpha_ndcg"] = final_metric;
    records.push_back(rec);
    text << std::left << std::setw(10) << method_name(method) << std::right << std::setw(12)
         << (episodes ? std::to_string(*episodes) : std::string("DNF")) << std::setw(12);
    if (secs) {
      text << *secs;
    } else {
      text << "DNF";
    }
    text << std::setw(12) << total << std::setw(12) << decisions << std::setw(10) << final_metric
         << '\n';
  }

  // Per-query inference latency against list length, on fresh untrained
  // parameters: learning does not change the cost.
  text << "\n" << std::left << std::setw(10) << "method" << std::right << std::setw(6) << "n"
       << std::setw(16) << "s/query" << std::setw(16) << "attention s/q" << '\n';
  std::vector<ordered_json> fits;
  for (Method method : config.methods) {
    std::vector<double> xs;
    std::vector<double> total_ys;
    std::vector<double> scorer_ys;
    for (int n : b.latency_sizes) {
      data::GeneratorConfig g = effective_generator(config);
      g.docs_per_query = n;
      g.queries = b.latency_queries;
      const data::Dataset ds = data::generate(g);
      const trainer::Model model = blank_model(config, ds);
      const reinforce::SequentialPolicy policy = blank_policy(config, ds);
      std::mt19937_64 rng(config.seed);
      const baselines::GreedyConfig gc{};
      metrics::MetricConfig mc = config.metric;
      mc.k = std::min<int>(mc.k, n);
      double attention = 0.0;
      const double total = seconds([&] {
        for (int r = 0; r < b.latency_repeats; ++r) {
          for (const data::QueryDocSet& item : ds.items) {
            switch (method) {
              case Method::Ma4div:
                ranker::rank_greedy(item, model.agent);
                break;
              case Method::MdpDiv:
                reinforce::rank_greedy(item, policy);
                break;
              case Method::Mmr:
                baselines::mmr_rank(item, gc);
                break;
              case Method::Xquad:
                baselines::xquad_rank(item, gc);
                break;
              case Method::Random:
                baselines::random_rank(item, rng);
                break;
              case Method::Oracle:
                baselines::oracle_greedy_rank(item, mc);
                break;
            }
          }
        }
      });
      if (method == Method::Ma4div) {
        attention = seconds([&] {
          for (int r = 0; r < b.latency_repeats; ++r) {
            for (const data::QueryDocSet& item : ds.items) {
              agent::cross_features(item.documents, model.agent);
            }
          }
        });
      }
      const double per = static_cast<double>(b.latency_repeats) * ds.size();
      ordered_json rec;
      rec["kind"] = "latency";
      rec["method"] = method_name(method);
      rec["n"] = n;
      rec["seconds_per_query"] = total / per;
      rec["attention_seconds_per_query"] =
          method == Method::Ma4div ? ordered_json(attention / per) : ordered_json(nullptr);
      records.push_back(rec);
      xs.push_back(n);
      total_ys.push_back(total / per);
      scorer_ys.push_back((total - attention) / per);
      text << std::left << std::setw(10) << method_name(method) << std::right << std::setw(6) << n
           << std::setw(16) << std::scientific << total / per << std::setw(16);
      if (method == Method::Ma4div) {
        text << attention / per;
      } else {
        text << "-";
      }
      text << std::fixed << '\n';
    }
    if (xs.size() >= 2) {
      const LineFit fit = fit_line(xs, total_ys);
      ordered_json rec;
      rec["kind"] = "latency_fit";
      rec["method"] = method_name(method);
      rec["slope_seconds_per_doc"] = fit.slope;
      rec["intercept_seconds"] = fit.intercept;
      if (method == Method::Ma4div) {
        rec["slope_excluding_attention"] = fit_line(xs, scorer_ys).slope;
      }
      fits.push_back(rec);
    }
  }
  text << '\n' << std::left << std::setw(10) << "method" << std::right << std::setw(16)
       << "slope s/doc" << std::setw(22) << "slope w/o attention" << '\n';
  for (const ordered_json& f : fits) {
    records.push_back(f);
    text << std::left << std::setw(10) << f["method"].get<std::string>() << std::right
         << std::scientific << std::setw(16) << f["slope_seconds_per_doc"].get<double>()
         << std::setw(22);
    if (f.contains("slope_excluding_attention")) {
      text << f["slope_excluding_attention"].get<double>();
    } else {
      text << "-";
    }
    text << std::fixed << '\n';
  }

  std::ostringstream jsonl;
  for (const ordered_json& r : records) jsonl << r.dump() << '\n';
  write_text(config.out / "bench.jsonl", jsonl.str());
  write_text(config.out / "bench.txt", text.str());
}

void run(const RunConfig& config) {
  if (config.command == "generate") return cmd_generate(config);
  if (config.command == "train") return cmd_train(config);
  if (config.command == "evaluate") return cmd_evaluate(config);
  if (config.command == "bench") return cmd_bench(config);
  throw std::invalid_argument("unknown command '" + config.command + "'");
}

}  // namespace ma4div::harness

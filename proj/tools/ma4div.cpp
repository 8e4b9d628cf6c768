// Command-line front end: generate, train, evaluate, bench.

#include "ma4div/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <utility>

namespace {

using ma4div::harness::RunConfig;

void add_common(CLI::App* cmd, RunConfig& c, std::string& config_file, std::vector<std::string>& methods) {
  cmd->add_option("--config", config_file, "JSON config file; its values win over flags");
  cmd->add_option("--seed", c.seed, "Seed for generation, splitting and training");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--dataset", c.dataset, "Dataset file (JSONL)");
  cmd->add_option("--checkpoint", c.checkpoint, "Checkpoint file for learned methods");
  cmd->add_option("--method", methods, "ma4div, mdpdiv, mmr, xquad, random, oracle")->delimiter(',');
  cmd->add_option("--alpha", c.metric.alpha, "Redundancy penalty of alpha-NDCG");
  cmd->add_option("--k", c.metric.k, "Metric and reward cutoff");
  cmd->add_option("--train-fraction", c.train_fraction, "Share of queries in the training split");

  cmd->add_option("--queries", c.generator.queries, "Generator: number of queries");
  cmd->add_option("--docs", c.generator.docs_per_query, "Generator: documents per query");
  cmd->add_option("--subtopics", c.generator.subtopics, "Generator: subtopics per query");
  cmd->add_option("--dim", c.generator.embedding_dim, "Generator: embedding dimension");
  cmd->add_option("--coverage", c.generator.coverage_rate, "Generator: P(document covers subtopic)");
  cmd->add_option("--signal", c.generator.signal_strength, "Generator: signal strength in [0, 1]");

  auto& t = c.trainer;
  cmd->add_option("--epochs", t.epochs, "Training epochs");
  cmd->add_option("--updates", t.updates_per_epoch, "Updates per epoch");
  cmd->add_option("--batch", t.batch_size, "Batch size");
  cmd->add_option("--buffer", t.buffer_capacity, "Replay capacity");
  cmd->add_option("--lr", t.optimizer.learning_rate, "Learning rate");
  cmd->add_option("--eps-horizon", t.exploration.horizon, "Episodes until epsilon reaches its floor");
  cmd->add_option("--actions", t.agent.actions, "Number of ranking scores |A|");
  cmd->add_option("--eval-every", t.eval_every, "Epochs between evaluations");
  cmd->add_option("--threshold", c.bench.threshold_fraction, "Bench: fraction of the oracle metric");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent search result diversification"};
  app.require_subcommand(1);
  RunConfig config;
  std::string config_file;
  std::vector<std::string> methods;
  const std::pair<const char*, const char*> commands[] = {
      {"generate", "Write a synthetic dataset to <out>/dataset.jsonl"},
      {"train", "Train ma4div or mdpdiv; writes checkpoint, log, curve and evaluation"},
      {"evaluate", "Score methods on the evaluation split"},
      {"bench", "Episodes and seconds to threshold, plus ranking latency"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, config, config_file, methods);
    cmd->callback([&config, name] { config.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (!methods.empty()) {
      config.methods.clear();
      for (const std::string& m : methods) config.methods.push_back(ma4div::harness::parse_method(m));
    } else if (config.command == "bench") {
      config.methods = {ma4div::harness::Method::Ma4div, ma4div::harness::Method::MdpDiv};
    }
    if (!config_file.empty()) {
      const std::string command = config.command;
      config = ma4div::harness::merge_file(config, config_file);
      config.command = command;
    }
    ma4div::harness::run(config);
  } catch (const std::exception& e) {
    std::cerr << "ma4div " << config.command << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}

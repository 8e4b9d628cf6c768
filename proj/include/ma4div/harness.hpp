#pragma once

// Experiment orchestration behind the command-line tool. Every command
// writes only under RunConfig::out and archives its effective config there
// as run_config.json.

#include "ma4div/dataset.hpp"
#include "ma4div/metrics.hpp"
#include "ma4div/reinforce.hpp"
#include "ma4div/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ma4div::harness {

enum class Method { Ma4div, MdpDiv, Mmr, Xquad, Random, Oracle };

Method parse_method(const std::string& name);
std::string method_name(Method method);

struct BenchConfig {
  /// Threshold as a fraction of the oracle-greedy mean alpha-NDCG@k.
  double threshold_fraction = 0.9;
  std::vector<int> latency_sizes{5, 10, 15, 30};
  int latency_queries = 20;
  int latency_repeats = 5;
};

struct RunConfig {
  std::string command;
  /// Drives the generator, the split, training and random baselines.
  std::uint64_t seed = 7;
  std::filesystem::path out = "out";
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> checkpoint;
  std::vector<Method> methods{Method::Ma4div};
  metrics::MetricConfig metric{0.5, 10};
  /// 1 trains and evaluates on every query.
  double train_fraction = 0.8;
  data::GeneratorConfig generator{};
  trainer::TrainerConfig trainer{};
  BenchConfig bench{};
};

nlohmann::ordered_json to_json(const RunConfig& config);
/// Overlays every key present in `j` onto `base`. Unknown keys throw.
RunConfig merge(RunConfig base, const nlohmann::json& j);
/// Reads a JSON config file and merges it over `base`.
RunConfig merge_file(RunConfig base, const std::filesystem::path& path);

/// The trainer settings reused for the sequential baseline.
reinforce::ReinforceConfig reinforce_config(const RunConfig& config);

void cmd_generate(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_bench(const RunConfig& config);

/// Dispatches on config.command.
void run(const RunConfig& config);

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
};

/// Ordinary least squares of y on x; needs two distinct x values.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ma4div::harness

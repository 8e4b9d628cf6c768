#pragma once

#include "ma4div/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ma4div::data {

/// One query with its candidate documents and subtopic judgments.
struct QueryDocSet {
  std::string query_id;
  Vector query;       // L
  Tensor documents;   // n x L, one document per row
  Judgments judgments;  // n x m, entries in {0, 1}

  Eigen::Index doc_count() const { return documents.rows(); }
  Eigen::Index subtopic_count() const { return judgments.cols(); }
  Eigen::Index embedding_dim() const { return query.size(); }

  bool operator==(const QueryDocSet&) const = default;
};

struct Dataset {
  std::vector<QueryDocSet> items;
  Eigen::Index embedding_dim = 0;
  Eigen::Index subtopics = 0;
  Eigen::Index docs_per_query = 0;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  bool operator==(const Dataset&) const = default;
};

/// Throws std::invalid_argument describing the first violated invariant.
void validate(const QueryDocSet& item);
/// Validates every item and that they agree on L, m and n; fills the
/// dataset-level dimensions from the first item.
Dataset make_dataset(std::vector<QueryDocSet> items);

/// Global state for the mixer: concat(q, d_1, ..., d_n) in document order.
Vector state_vector(const QueryDocSet& item);

struct GeneratorConfig {
  std::uint64_t seed = 7;
  int queries = 100;
  int docs_per_query = 15;
  int subtopics = 50;
  int embedding_dim = 32;
  double coverage_rate = 0.1;
  double signal_strength = 0.9;

  void validate() const;
};

/// Deterministic under config.seed. Document embeddings mix the document's
/// judgment row (through a fixed random projection) with Gaussian noise;
/// the query embedding projects the mean judgment row of its documents.
Dataset generate(const GeneratorConfig& config);

/// One JSON object per line: query_id, q, D, J.
void save(const Dataset& dataset, const std::filesystem::path& path);
void write_jsonl(const Dataset& dataset, std::ostream& out);
Dataset load(const std::filesystem::path& path);
Dataset read_jsonl(std::istream& in, const std::string& source = "<stream>");

/// Partition by query, deterministic under seed. Each side keeps the
/// original relative order of its queries.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed);

}  // namespace ma4div::data

#include "ma4div/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

namespace ma4div::data {

using nlohmann::ordered_json;

void validate(const QueryDocSet& item) {
  const std::string where = "query '" + item.query_id + "': ";
  if (item.query.size() == 0) throw std::invalid_argument(where + "empty query embedding");
  if (item.documents.rows() < 1) throw std::invalid_argument(where + "no documents");
  if (item.documents.cols() != item.query.size()) {
    throw std::invalid_argument(where + "documents have dimension " +
                                std::to_string(item.documents.cols()) + ", query has " +
                                std::to_string(item.query.size()));
  }
  if (item.judgments.rows() != item.documents.rows()) {
    throw std::invalid_argument(where + "judgment matrix has " +
                                std::to_string(item.judgments.rows()) + " rows for " +
                                std::to_string(item.documents.rows()) + " documents");
  }
  if (item.judgments.cols() < 1) throw std::invalid_argument(where + "no subtopics");
  if (((item.judgments.array() != 0) && (item.judgments.array() != 1)).any()) {
    throw std::invalid_argument(where + "judgments must be binary");
  }
  if (!all_finite(item.query) || !all_finite(item.documents)) {
    throw std::invalid_argument(where + "non-finite embedding entry");
  }
}

Dataset make_dataset(std::vector<QueryDocSet> items) {
  Dataset out;
  for (const QueryDocSet& item : items) {
    validate(item);
    if (out.embedding_dim == 0) {
      out.embedding_dim = item.embedding_dim();
      out.subtopics = item.subtopic_count();
      out.docs_per_query = item.doc_count();
    } else if (item.embedding_dim() != out.embedding_dim ||
               item.subtopic_count() != out.subtopics || item.doc_count() != out.docs_per_query) {
      throw std::invalid_argument("query '" + item.query_id +
                                  "' disagrees with the dataset on embedding dimension, "
                                  "subtopic count or documents per query");
    }
  }
  out.items = std::move(items);
  return out;
}

Vector state_vector(const QueryDocSet& item) {
  const Eigen::Index dim = item.embedding_dim();
  Vector s(dim * (item.doc_count() + 1));
  s.head(dim) = item.query;
  s.tail(item.documents.size()) = Eigen::Map<const Vector>(item.documents.data(),
                                                           item.documents.size());
  return s;
}

// ---------------------------------------------------------------------------

void GeneratorConfig::validate() const {
  if (queries < 1) throw std::invalid_argument("generator: queries must be >= 1");
  if (docs_per_query < 1) throw std::invalid_argument("generator: docs per query must be >= 1");
  if (subtopics < 1) throw std::invalid_argument("generator: subtopics must be >= 1");
  if (embedding_dim < 1) throw std::invalid_argument("generator: embedding dim must be >= 1");
  if (!(coverage_rate > 0.0 && coverage_rate < 1.0)) {
    throw std::invalid_argument("generator: coverage rate must lie in (0, 1)");
  }
  if (!(signal_strength >= 0.0 && signal_strength <= 1.0)) {
    throw std::invalid_argument("generator: signal strength must lie in [0, 1]");
  }
}

namespace {

constexpr int kMaxResample = 1000;

Vector normalized(const Vector& v) {
  const double norm = v.norm();
  return norm > 0.0 ? Vector(v / norm) : v;
}

Vector gaussian(Eigen::Index size, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace

Dataset generate(const GeneratorConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const Eigen::Index n = config.docs_per_query;
  const Eigen::Index m = config.subtopics;
  const Eigen::Index dim = config.embedding_dim;

  // Rows 0..m-1 embed subtopics; row m is the direction of documents that
  // cover nothing.
  Tensor projection(m + 1, dim);
  for (Eigen::Index r = 0; r <= m; ++r) projection.row(r) = gaussian(dim, rng).transpose();
  const Tensor subtopic_rows = projection.topRows(m);

  std::bernoulli_distribution covers(config.coverage_rate);
  std::vector<QueryDocSet> items;
  items.reserve(static_cast<std::size_t>(config.queries));
  const int id_width = static_cast<int>(std::to_string(config.queries).size());

  for (int k = 0; k < config.queries; ++k) {
    Judgments judgments(n, m);
    int attempt = 0;
    do {
      if (++attempt > kMaxResample) {
        throw std::invalid_argument("generator: no covered subtopic after " +
                                    std::to_string(kMaxResample) +
                                    " resamples; coverage rate too low for this shape");
      }
      for (Eigen::Index i = 0; i < judgments.size(); ++i) judgments.data()[i] = covers(rng) ? 1 : 0;
    } while (judgments.sum() == 0);

    const Tensor coverage = judgments.cast<double>();
    Tensor documents(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector signal = coverage.row(i).sum() > 0.0
                          ? normalized((coverage.row(i) * subtopic_rows).transpose())
                          : normalized(projection.row(m).transpose());
      Vector noise = normalized(gaussian(dim, rng));
      Vector mixed = config.signal_strength * signal + (1.0 - config.signal_strength) * noise;
      documents.row(i) = (mixed.norm() > 1e-12 ? normalized(mixed) : signal).transpose();
    }
    Vector query = normalized((coverage.colwise().mean() * subtopic_rows).transpose());

    std::ostringstream id;
    id << 'q' << std::setw(id_width) << std::setfill('0') << k;
    items.push_back({id.str(), std::move(query), std::move(documents), std::move(judgments)});
  }
  return make_dataset(std::move(items));
}

// ---------------------------------------------------------------------------

void write_jsonl(const Dataset& dataset, std::ostream& out) {
  for (const QueryDocSet& item : dataset.items) {
    ordered_json record;
    record["query_id"] = item.query_id;
    record["q"] = std::vector<double>(item.query.data(), item.query.data() + item.query.size());
    ordered_json docs = ordered_json::array();
    for (Eigen::Index i = 0; i < item.documents.rows(); ++i) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index j = 0; j < item.documents.cols(); ++j) row.push_back(item.documents(i, j));
      docs.push_back(std::move(row));
    }
    record["D"] = std::move(docs);
    ordered_json judgments = ordered_json::array();
    for (Eigen::Index i = 0; i < item.judgments.rows(); ++i) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index j = 0; j < item.judgments.cols(); ++j) row.push_back(item.judgments(i, j));
      judgments.push_back(std::move(row));
    }
    record["J"] = std::move(judgments);
    out << record.dump() << '\n';
  }
}

void save(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_jsonl(dataset, out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {

class RecordError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<double> number_array(const ordered_json& value, const std::string& field) {
  if (!value.is_array()) throw RecordError("field '" + field + "' must be an array");
  std::vector<double> out;
  out.reserve(value.size());
  for (const ordered_json& v : value) {
    if (!v.is_number()) throw RecordError("field '" + field + "' must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

QueryDocSet parse_record(const ordered_json& record) {
  if (!record.is_object()) throw RecordError("record is not a JSON object");
  for (const auto& [key, value] : record.items()) {
    if (key != "query_id" && key != "q" && key != "D" && key != "J") {
      throw RecordError("unknown field '" + key + "'");
    }
  }
  for (const char* key : {"query_id", "q", "D", "J"}) {
    if (!record.contains(key)) throw RecordError(std::string("missing field '") + key + "'");
  }
  if (!record["query_id"].is_string()) throw RecordError("field 'query_id' must be a string");

  QueryDocSet item;
  item.query_id = record["query_id"].get<std::string>();
  const std::vector<double> q = number_array(record["q"], "q");
  item.query = Eigen::Map<const Vector>(q.data(), static_cast<Eigen::Index>(q.size()));

  const ordered_json& docs = record["D"];
  if (!docs.is_array() || docs.empty()) throw RecordError("field 'D' must be a non-empty array");
  item.documents.resize(static_cast<Eigen::Index>(docs.size()), item.query.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const std::vector<double> row = number_array(docs[i], "D");
    if (static_cast<Eigen::Index>(row.size()) != item.query.size()) {
      throw RecordError("document " + std::to_string(i) + " has dimension " +
                        std::to_string(row.size()) + ", query has " +
                        std::to_string(item.query.size()));
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      item.documents(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
  }

  const ordered_json& judg = record["J"];
  if (!judg.is_array() || judg.size() != docs.size()) {
    throw RecordError("field 'J' must have one row per document");
  }
  std::size_t width = 0;
  for (std::size_t i = 0; i < judg.size(); ++i) {
    if (!judg[i].is_array() || judg[i].empty()) throw RecordError("J rows must be non-empty arrays");
    if (i == 0) {
      width = judg[i].size();
      item.judgments.resize(static_cast<Eigen::Index>(judg.size()),
                            static_cast<Eigen::Index>(width));
    } else if (judg[i].size() != width) {
      throw RecordError("J row " + std::to_string(i) + " has " + std::to_string(judg[i].size()) +
                        " entries, expected " + std::to_string(width));
    }
    for (std::size_t j = 0; j < width; ++j) {
      const ordered_json& v = judg[i][j];
      if (!v.is_number_integer() || (v.get<long long>() != 0 && v.get<long long>() != 1)) {
        throw RecordError("J[" + std::to_string(i) + "][" + std::to_string(j) + "] = " + v.dump() +
                          " is not binary");
      }
      item.judgments(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<int>(v.get<long long>());
    }
  }
  validate(item);
  return item;
}

}  // namespace

Dataset read_jsonl(std::istream& in, const std::string& source) {
  std::vector<QueryDocSet> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      items.push_back(parse_record(ordered_json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (items.empty()) throw std::runtime_error(source + ": no records");
  try {
    return make_dataset(std::move(items));
  } catch (const std::exception& e) {
    throw std::runtime_error(source + ": " + e.what());
  }
}

Dataset load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  return read_jsonl(in, path.string());
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split: train fraction must lie in (0, 1)");
  }
  const std::size_t total = dataset.size();
  const auto train_count =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(total)));
  if (train_count == 0 || train_count == total) {
    throw std::invalid_argument("split: fraction " + std::to_string(train_fraction) + " of " +
                                std::to_string(total) + " queries leaves one side empty");
  }
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> in_train(total, false);
  for (std::size_t i = 0; i < train_count; ++i) in_train[order[i]] = true;

  Dataset train = dataset;
  Dataset test = dataset;
  train.items.clear();
  test.items.clear();
  for (std::size_t i = 0; i < total; ++i) {
    (in_train[i] ? train : test).items.push_back(dataset.items[i]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace ma4div::data

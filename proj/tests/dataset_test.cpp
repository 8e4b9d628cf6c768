#include "ma4div/dataset.hpp"

#include "ma4div/baselines.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

namespace {

using namespace ma4div;

data::QueryDocSet tiny_item() {
  data::QueryDocSet item;
  item.query_id = "q1";
  item.query = Vector::Ones(2);
  item.documents = Tensor(2, 2);
  item.documents << 1, 0, 0, 1;
  item.judgments = Judgments(2, 1);
  item.judgments << 1, 0;
  return item;
}

data::Dataset numbered(int count) {
  std::vector<data::QueryDocSet> items;
  for (int i = 0; i < count; ++i) {
    data::QueryDocSet item = tiny_item();
    item.query_id = "q" + std::to_string(i);
    items.push_back(item);
  }
  return data::make_dataset(std::move(items));
}

TEST(Generate, SameSeedSameBytes) {
  data::GeneratorConfig config;
  config.queries = 5;
  std::ostringstream a, b;
  data::write_jsonl(data::generate(config), a);
  data::write_jsonl(data::generate(config), b);
  EXPECT_EQ(a.str(), b.str());
  config.seed = 8;
  std::ostringstream c;
  data::write_jsonl(data::generate(config), c);
  EXPECT_NE(a.str(), c.str());
}

TEST(Generate, DefaultsMatchProfile) {
  const data::GeneratorConfig config;
  EXPECT_EQ(config.docs_per_query, 15);
  EXPECT_EQ(config.subtopics, 50);
}

TEST(Generate, EmpiricalCoverageNearRate) {
  data::GeneratorConfig config;
  config.queries = 100;
  config.docs_per_query = 10;
  config.subtopics = 5;
  config.coverage_rate = 0.3;
  const data::Dataset ds = data::generate(config);
  double ones = 0.0, cells = 0.0;
  for (const auto& item : ds.items) {
    ones += item.judgments.sum();
    cells += static_cast<double>(item.judgments.size());
    EXPECT_GE(item.judgments.maxCoeff(), 1);
    EXPECT_TRUE((item.judgments.array() == 0 || item.judgments.array() == 1).all());
  }
  EXPECT_NEAR(ones / cells, 0.3, 0.05);
}

TEST(Generate, FullSignalMakesIdenticalRowsCollinear) {
  data::GeneratorConfig config;
  config.queries = 20;
  config.docs_per_query = 8;
  config.subtopics = 2;
  config.coverage_rate = 0.5;
  config.signal_strength = 1.0;
  int pairs = 0;
  for (const auto& item : data::generate(config).items) {
    for (int i = 0; i < item.doc_count(); ++i) {
      for (int j = i + 1; j < item.doc_count(); ++j) {
        if (item.judgments.row(i) != item.judgments.row(j)) continue;
        if (item.judgments.row(i).sum() == 0) continue;
        ++pairs;
        EXPECT_NEAR(baselines::cosine(item.documents.row(i).transpose(),
                                      item.documents.row(j).transpose()),
                    1.0, 1e-9);
      }
    }
  }
  EXPECT_GT(pairs, 0);
}

TEST(Generate, RejectsBadConfig) {
  data::GeneratorConfig config;
  config.coverage_rate = 0.0;
  EXPECT_THROW(data::generate(config), std::invalid_argument);
  config = {};
  config.queries = 0;
  EXPECT_THROW(data::generate(config), std::invalid_argument);
}

TEST(Jsonl, RoundTripOneQuery) {
  const data::Dataset ds = data::make_dataset({tiny_item()});
  std::stringstream buf;
  data::write_jsonl(ds, buf);
  EXPECT_EQ(data::read_jsonl(buf), ds);
}

TEST(Jsonl, RoundTripGeneratedIsExact) {
  data::GeneratorConfig config;
  config.queries = 3;
  const data::Dataset ds = data::generate(config);
  std::stringstream buf;
  data::write_jsonl(ds, buf);
  EXPECT_EQ(data::read_jsonl(buf), ds);
}

TEST(Jsonl, RejectsNonBinaryJudgment) {
  std::istringstream in(R"({"query_id":"a","q":[1,0],"D":[[1,0],[0,1]],"J":[[2],[0]]})");
  EXPECT_THROW(data::read_jsonl(in), std::runtime_error);
}

TEST(Jsonl, RejectsMismatchedSubtopicCount) {
  std::istringstream in(R"({"query_id":"a","q":[1,0],"D":[[1,0],[0,1]],"J":[[1,0],[0]]})");
  EXPECT_THROW(data::read_jsonl(in), std::runtime_error);
}

TEST(Jsonl, RejectsMismatchAcrossQueriesWithLineNumber) {
  std::istringstream in(
      "{\"query_id\":\"a\",\"q\":[1,0],\"D\":[[1,0],[0,1]],\"J\":[[1],[0]]}\n"
      "{\"query_id\":\"b\",\"q\":[1,0],\"D\":[[1,0],[0,1]],\"J\":[[1,0],[0,1]]}\n");
  EXPECT_THROW(data::read_jsonl(in), std::runtime_error);
  std::istringstream broken("{\"query_id\":\"a\"\n");
  try {
    data::read_jsonl(broken, "f.jsonl");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("f.jsonl:1"), std::string::npos) << e.what();
  }
}

TEST(Split, TenQueriesEightTwoDisjoint) {
  const data::Dataset ds = numbered(10);
  const auto [train, test] = data::split(ds, 0.8, 1);
  EXPECT_EQ(train.size(), 8u);
  EXPECT_EQ(test.size(), 2u);
  std::set<std::string> ids;
  for (const auto& i : train.items) ids.insert(i.query_id);
  for (const auto& i : test.items) ids.insert(i.query_id);
  EXPECT_EQ(ids.size(), 10u);

  const auto [train2, test2] = data::split(ds, 0.8, 1);
  EXPECT_EQ(train, train2);
  EXPECT_EQ(test, test2);
}

TEST(Split, LargeCorpusCounts) {
  const data::Dataset ds = numbered(4473);
  const auto [train, test] = data::split(ds, 0.8, 3);
  EXPECT_EQ(train.size(), 3578u);
  EXPECT_EQ(test.size(), 895u);
}

TEST(Split, RejectsDegenerateFractions) {
  const data::Dataset ds = numbered(3);
  EXPECT_THROW(data::split(ds, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(data::split(ds, 1.0, 1), std::invalid_argument);
}

TEST(State, ConcatenatesQueryThenDocuments) {
  const Vector s = data::state_vector(tiny_item());
  ASSERT_EQ(s.size(), 6);
  EXPECT_EQ(s(0), 1);
  EXPECT_EQ(s(2), 1);
  EXPECT_EQ(s(3), 0);
  EXPECT_EQ(s(5), 1);
}

}  // namespace

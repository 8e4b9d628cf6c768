#include "ma4div/diff.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <limits>

namespace {

using namespace ma4div;
using diff::Graph;
using diff::Parameter;
using diff::Var;

constexpr double kGradTol = 1e-4;

Tensor scalar(double v) { return Tensor::Constant(1, 1, v); }

TEST(Ops, EluAndAbsHandValues) {
  Graph g;
  EXPECT_DOUBLE_EQ(diff::elu(g.constant(scalar(0.5))).value()(0, 0), 0.5);
  EXPECT_NEAR(diff::elu(g.constant(scalar(-1.0))).value()(0, 0), -0.63212, 1e-5);
  EXPECT_DOUBLE_EQ(diff::abs(g.constant(scalar(-2.0))).value()(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(diff::relu(g.constant(scalar(-2.0))).value()(0, 0), 0.0);
}

TEST(Ops, MatmulShapeMismatchNamesBothOperands) {
  Graph g;
  Var a = g.constant(Tensor::Zero(2, 3));
  Var b = g.constant(Tensor::Zero(2, 3));
  try {
    diff::matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("[2x3]"), std::string::npos) << what;
  }
}

TEST(Ops, AddBroadcastsSingleRow) {
  Graph g;
  Tensor a(2, 2);
  a << 1, 2, 3, 4;
  Tensor b(1, 2);
  b << 10, 20;
  Tensor expected(2, 2);
  expected << 11, 22, 13, 24;
  EXPECT_EQ(diff::add(g.constant(a), g.constant(b)).value(), expected);
  EXPECT_THROW(diff::add(g.constant(a), g.constant(Tensor::Zero(3, 2))), ShapeError);
}

TEST(Ops, ReshapeIsRowMajorAndChecksCount) {
  Graph g;
  Tensor a(2, 3);
  a << 1, 2, 3, 4, 5, 6;
  const Tensor r = diff::reshape(g.constant(a), 3, 2).value();
  EXPECT_EQ(r(0, 1), 2);
  EXPECT_EQ(r(1, 0), 3);
  EXPECT_THROW(diff::reshape(g.constant(a), 4, 2), ShapeError);
}

TEST(Ops, ConcatAlongBothAxes) {
  Graph g;
  std::array<Var, 2> parts{g.constant(Tensor::Ones(2, 1)), g.constant(Tensor::Zero(2, 2))};
  EXPECT_EQ(diff::concat(parts, 1).cols(), 3);
  std::array<Var, 2> rows{g.constant(Tensor::Ones(1, 2)), g.constant(Tensor::Zero(2, 2))};
  EXPECT_EQ(diff::concat(rows, 0).rows(), 3);
  EXPECT_THROW(diff::concat(parts, 0), ShapeError);
}

TEST(Ops, NonFiniteResultThrows) {
  Graph g;
  const double big = std::numeric_limits<double>::max();
  EXPECT_THROW(diff::scale(g.constant(scalar(big)), 10.0), NumericError);
}

TEST(Ops, SoftmaxRowsSumToOneInOpenInterval) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Graph g;
    const Tensor s = diff::softmax_rows(g.constant(oracle::random_tensor(3, 5, rng, 4.0))).value();
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      EXPECT_NEAR(s.row(r).sum(), 1.0, 1e-12);
      EXPECT_GT(s.row(r).minCoeff(), 0.0);
      EXPECT_LT(s.row(r).maxCoeff(), 1.0);
    }
  }
}

TEST(Ops, LogSoftmaxMatchesLogOfSoftmax) {
  std::mt19937_64 rng(4);
  Graph g;
  Var x = g.constant(oracle::random_tensor(2, 6, rng, 3.0));
  const Tensor a = diff::log_softmax_rows(x).value();
  const Tensor b = diff::softmax_rows(x).value().array().log().matrix();
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Backward, SquareHasGradientSix) {
  Parameter x{"x", scalar(3.0)};
  Graph g;
  Var v = g.parameter(x);
  g.backward(diff::mul(v, v));
  EXPECT_DOUBLE_EQ(g.grad(x)(0, 0), 6.0);
}

TEST(Backward, AbsSubgradient) {
  for (const auto& [input, expected] : std::array<std::pair<double, double>, 3>{
           {{1.0, 1.0}, {-1.0, -1.0}, {0.0, 0.0}}}) {
    Parameter x{"x", scalar(input)};
    Graph g;
    g.backward(diff::abs(g.parameter(x)));
    EXPECT_DOUBLE_EQ(g.grad(x)(0, 0), expected) << "at " << input;
  }
}

TEST(Backward, AccumulatesWithoutResetAndRepeatsAfterReset) {
  std::mt19937_64 rng(5);
  Parameter w{"w", oracle::random_tensor(3, 2, rng)};
  const Tensor x = oracle::random_tensor(4, 3, rng);
  const Tensor y = oracle::random_tensor(4, 2, rng);
  Graph g;
  Var loss = diff::mse(diff::matmul(g.constant(x), g.parameter(w)), g.constant(y));
  g.backward(loss);
  const Tensor once = g.grad(w);
  g.backward(loss);
  EXPECT_LT((g.grad(w) - 2.0 * once).cwiseAbs().maxCoeff(), 1e-15);
  g.zero_grad();
  g.backward(loss);
  EXPECT_EQ(g.grad(w), once);
}

TEST(Backward, UnusedParameterHasZeroGradient) {
  Parameter used{"used", scalar(1.0)};
  Parameter unused{"unused", Tensor::Ones(2, 2)};
  Graph g;
  g.backward(diff::sum(g.parameter(used)));
  EXPECT_EQ(g.grad(unused), Tensor::Zero(2, 2));
}

TEST(Backward, BackwardNeedsScalarLoss) {
  Graph g;
  EXPECT_THROW(g.backward(g.constant(Tensor::Ones(2, 1))), ShapeError);
}

TEST(GradientCheck, MseOfLinearMap) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Parameter w{"w", oracle::random_tensor(4, 3, rng)};
    const Tensor x = oracle::random_tensor(5, 4, rng);
    const Tensor y = oracle::random_tensor(5, 3, rng);
    std::array<Parameter*, 1> params{&w};
    const double err = oracle::gradient_check(params, [&](Graph& g) {
      return diff::mse(diff::matmul(g.constant(x), g.parameter(w)), g.constant(y));
    });
    EXPECT_LT(err, kGradTol);
  }
}

TEST(GradientCheck, EveryElementwiseAndStructuralOp) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Parameter a{"a", oracle::random_tensor(3, 4, rng)};
    Parameter b{"b", oracle::random_tensor(1, 4, rng)};
    Parameter c{"c", oracle::random_tensor(3, 4, rng)};
    // Keep inputs of abs and relu away from their kinks.
    for (Eigen::Index i = 0; i < a.value.size(); ++i) {
      if (std::abs(a.value.data()[i]) < 0.05) a.value.data()[i] = 0.1;
    }
    const Tensor weights = oracle::random_tensor(6, 2, rng);
    std::array<Parameter*, 3> params{&a, &b, &c};
    const double err = oracle::gradient_check(params, [&](Graph& g) {
      Var va = g.parameter(a);
      Var vc = g.parameter(c);
      Var h = diff::add(diff::elu(va), g.parameter(b));
      Var r = diff::relu(va);
      Var m = diff::mul(diff::abs(va), vc);
      std::array<Var, 2> parts{diff::slice_cols(h, 1, 2), diff::softmax_rows(m)};
      Var cat = diff::concat(parts, 1);  // 3 x 6
      Var proj = diff::matmul(cat, g.constant(weights));
      Var t = diff::transpose(diff::reshape(r, 4, 3));
      Var ls = diff::log_softmax_rows(diff::scale(t, 0.5));
      std::array<Var, 2> tail{diff::reshape(proj, 1, 6), diff::reshape(ls, 1, 12)};
      return diff::sum(diff::mul(diff::concat(tail, 1), diff::concat(tail, 1)));
    });
    EXPECT_LT(err, kGradTol) << "trial " << trial;
  }
}

TEST(Optimizer, PlainDescentStep) {
  Parameter p{"p", scalar(1.0)};
  diff::Optimizer opt({diff::Method::GradientDescent, 0.1});
  std::array<Parameter*, 1> params{&p};
  std::array<Tensor, 1> grads{scalar(0.5)};
  opt.step(params, grads);
  EXPECT_DOUBLE_EQ(p.value(0, 0), 0.95);
}

TEST(Optimizer, AdamZeroGradientLeavesParameters) {
  std::mt19937_64 rng(1);
  Parameter p{"p", oracle::random_tensor(2, 3, rng)};
  const Tensor before = p.value;
  diff::Optimizer opt({});
  std::array<Parameter*, 1> params{&p};
  std::array<Tensor, 1> grads{Tensor::Zero(2, 3)};
  for (int i = 0; i < 3; ++i) opt.step(params, grads);
  EXPECT_EQ(p.value, before);
}

TEST(Optimizer, AdamFirstStepMovesByLearningRate) {
  Parameter p{"p", scalar(1.0)};
  diff::Optimizer opt({diff::Method::Adam, 1e-3});
  std::array<Parameter*, 1> params{&p};
  std::array<Tensor, 1> grads{scalar(4.0)};
  opt.step(params, grads);
  EXPECT_NEAR(p.value(0, 0), 1.0 - 1e-3, 1e-9);
}

TEST(Optimizer, DefaultLearningRate) { EXPECT_DOUBLE_EQ(diff::OptimizerConfig{}.learning_rate, 1e-5); }

TEST(Optimizer, NonFiniteGradientRejectedWithoutUpdate) {
  Parameter p{"layer.weight", scalar(1.0)};
  Parameter q{"other", scalar(2.0)};
  diff::Optimizer opt({diff::Method::GradientDescent, 0.1});
  std::array<Parameter*, 2> params{&q, &p};
  std::array<Tensor, 2> grads{scalar(1.0), scalar(std::numeric_limits<double>::quiet_NaN())};
  try {
    opt.step(params, grads);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer.weight"), std::string::npos);
  }
  EXPECT_EQ(q.value(0, 0), 2.0);
  EXPECT_EQ(p.value(0, 0), 1.0);
}

TEST(Init, GlorotBoundsAndDeterminism) {
  std::mt19937_64 a(9), b(9);
  const Parameter p = diff::glorot("w", 20, 30, a);
  const Parameter q = diff::glorot("w", 20, 30, b);
  EXPECT_EQ(p.value, q.value);
  const double bound = std::sqrt(6.0 / 50.0);
  EXPECT_LE(p.value.cwiseAbs().maxCoeff(), bound);
}

}  // namespace

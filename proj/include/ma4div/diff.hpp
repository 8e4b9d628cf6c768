#pragma once

// Reverse-mode differentiation over small dense matrices.
//
// A Graph records every operation applied to its Vars. Leaves are either
// constants (copied in) or references to Parameters, which are never copied
// and whose gradients accumulate inside the Graph until zero_grad().

#include "ma4div/tensor.hpp"

#include <functional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ma4div::diff {

struct Parameter {
  std::string name;
  Tensor value;
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the Graph lives.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Tensor& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Binding the same Parameter twice returns the same leaf.
  Var parameter(const Parameter& p);

  /// Accumulates d(loss)/d(leaf) into the per-parameter gradients.
  void backward(Var loss);

  /// Zero tensor when the parameter never reached the loss.
  Tensor grad(const Parameter& p) const;
  std::vector<Tensor> grads(std::span<Parameter* const> params) const;
  void zero_grad();

  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  const Tensor& value(int id) const;
  Tensor& node_grad(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  const std::vector<int>& inputs(int id) const { return nodes_[static_cast<std::size_t>(id)].inputs; }
  Var record(const char* op, Tensor value, std::vector<int> inputs, BackwardFn backward);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    std::vector<int> inputs;
    BackwardFn backward;
    const Parameter* param = nullptr;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  std::unordered_map<const Parameter*, Tensor> param_grads_;
};

// ---------------------------------------------------------------------------
// Operations. Every op checks its shapes and throws ShapeError naming both
// operands, and throws NumericError if the result is not finite.

/// [r x k] * [k x c].
Var matmul(Var a, Var b);
/// Same shape, or `b` a single row broadcast over the rows of `a`.
Var add(Var a, Var b);
/// Elementwise product of equal shapes.
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var transpose(Var a);
/// axis 0 stacks rows, axis 1 stacks columns.
Var concat(std::span<const Var> parts, int axis);
/// Row-major reinterpretation; element count must match.
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
/// Subgradient at exactly 0 is 0.
Var abs(Var a);
/// ELU with unit alpha.
Var elu(Var a);
Var relu(Var a);
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
/// Sum of all elements as a 1x1 tensor.
Var sum(Var a);
/// Mean of squared differences as a 1x1 tensor.
Var mse(Var prediction, Var target);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator*(Var a, Var b) { return matmul(a, b); }

// Scalar definitions shared by the ops and by non-graph code paths.
inline double elu(double x) { return x >= 0.0 ? x : std::expm1(x); }
inline double elu_grad(double x) { return x >= 0.0 ? 1.0 : std::exp(x); }

// ---------------------------------------------------------------------------

enum class Method { GradientDescent, Adam };

struct OptimizerConfig {
  Method method = Method::Adam;
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment state is positional: call step() with the same parameter list
/// every time.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  /// Throws NumericError naming the parameter if any gradient is not finite;
  /// no parameter is modified in that case.
  void step(std::span<Parameter* const> params, std::span<const Tensor> grads);

  const OptimizerConfig& config() const { return config_; }
  long steps() const { return steps_; }

 private:
  OptimizerConfig config_;
  long steps_ = 0;
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
};

/// Glorot-uniform initialised parameter.
Parameter glorot(std::string name, Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

}  // namespace ma4div::diff

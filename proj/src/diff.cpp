#include "ma4div/diff.hpp"

#include <cmath>

namespace ma4div::diff {

namespace {

Graph& graph_of(Var a) {
  if (a.graph == nullptr) throw std::logic_error("Var is not bound to a graph");
  return *a.graph;
}

Graph& graph_of(Var a, Var b) {
  if (a.graph != b.graph) throw std::logic_error("operands belong to different graphs");
  return graph_of(a);
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                   shape_string(b));
}

void accumulate(Graph& g, int id, const Tensor& delta) {
  if (!g.needs_grad(id)) return;
  Tensor& grad = g.node_grad(id);
  if (grad.size() == 0) {
    grad = delta;
  } else {
    grad += delta;
  }
}

}  // namespace

const Tensor& Var::value() const { return graph->value(id); }

const Tensor& Graph::value(int id) const {
  const Node& node = nodes_[static_cast<std::size_t>(id)];
  return node.external != nullptr ? *node.external : node.value;
}

Var Graph::constant(Tensor value) {
  if (value.size() == 0) throw ShapeError("constant: empty tensor");
  if (!all_finite(value)) throw NumericError("constant: non-finite input");
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::parameter(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{this, it->second};
  if (!all_finite(p.value)) throw NumericError("parameter '" + p.name + "' is not finite");
  Node node;
  node.external = &p.value;
  node.param = &p;
  node.needs_grad = true;
  nodes_.push_back(std::move(node));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&p, id);
  return Var{this, id};
}

Var Graph::record(const char* op, Tensor value, std::vector<int> inputs, BackwardFn backward) {
  if (!all_finite(value)) {
    throw NumericError(std::string(op) + ": non-finite result of shape " + shape_string(value));
  }
  Node node;
  node.value = std::move(value);
  for (int in : inputs) node.needs_grad = node.needs_grad || needs_grad(in);
  node.inputs = std::move(inputs);
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw std::logic_error("backward: loss belongs to another graph");
  const Tensor& lv = value(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + shape_string(lv));
  }
  for (Node& node : nodes_) node.grad.resize(0, 0);
  if (!needs_grad(loss.id)) return;
  nodes_[static_cast<std::size_t>(loss.id)].grad = Tensor::Ones(1, 1);

  for (int id = loss.id; id >= 0; --id) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.needs_grad || node.grad.size() == 0) continue;
    if (node.param != nullptr) {
      auto [it, inserted] = param_grads_.try_emplace(node.param, node.grad);
      if (!inserted) it->second += node.grad;
    } else if (node.backward) {
      node.backward(*this, id);
    }
  }
}

Tensor Graph::grad(const Parameter& p) const {
  if (auto it = param_grads_.find(&p); it != param_grads_.end()) return it->second;
  return Tensor::Zero(p.value.rows(), p.value.cols());
}

std::vector<Tensor> Graph::grads(std::span<Parameter* const> params) const {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back(grad(*p));
  return out;
}

void Graph::zero_grad() { param_grads_.clear(); }

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) shape_mismatch("matmul", av, bv);
  return g.record("matmul", av * bv, {a.id, b.id}, [](Graph& g, int self) {
    const int ia = g.inputs(self)[0];
    const int ib = g.inputs(self)[1];
    const Tensor& up = g.node_grad(self);
    if (g.needs_grad(ia)) accumulate(g, ia, up * g.value(ib).transpose());
    if (g.needs_grad(ib)) accumulate(g, ib, g.value(ia).transpose() * up);
  });
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() == bv.rows() && av.cols() == bv.cols()) {
    return g.record("add", av + bv, {a.id, b.id}, [](Graph& g, int self) {
      const Tensor& up = g.node_grad(self);
      accumulate(g, g.inputs(self)[0], up);
      accumulate(g, g.inputs(self)[1], up);
    });
  }
  if (bv.rows() == 1 && bv.cols() == av.cols()) {
    Tensor out = av.rowwise() + bv.row(0);
    return g.record("add", std::move(out), {a.id, b.id}, [](Graph& g, int self) {
      const Tensor& up = g.node_grad(self);
      accumulate(g, g.inputs(self)[0], up);
      accumulate(g, g.inputs(self)[1], up.colwise().sum());
    });
  }
  shape_mismatch("add", av, bv);
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) shape_mismatch("mul", av, bv);
  return g.record("mul", av.cwiseProduct(bv), {a.id, b.id}, [](Graph& g, int self) {
    const int ia = g.inputs(self)[0];
    const int ib = g.inputs(self)[1];
    const Tensor& up = g.node_grad(self);
    if (g.needs_grad(ia)) accumulate(g, ia, up.cwiseProduct(g.value(ib)));
    if (g.needs_grad(ib)) accumulate(g, ib, up.cwiseProduct(g.value(ia)));
  });
}

Var scale(Var a, double factor) {
  Graph& g = graph_of(a);
  return g.record("scale", a.value() * factor, {a.id}, [factor](Graph& g, int self) {
    accumulate(g, g.inputs(self)[0], g.node_grad(self) * factor);
  });
}

Var transpose(Var a) {
  Graph& g = graph_of(a);
  return g.record("transpose", a.value().transpose(), {a.id}, [](Graph& g, int self) {
    accumulate(g, g.inputs(self)[0], g.node_grad(self).transpose());
  });
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  Graph& g = graph_of(parts.front());
  const Tensor& first = parts.front().value();
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<int> ids;
  for (Var p : parts) {
    graph_of(parts.front(), p);
    const Tensor& v = p.value();
    if (axis == 0 && v.cols() != first.cols()) shape_mismatch("concat(rows)", first, v);
    if (axis == 1 && v.rows() != first.rows()) shape_mismatch("concat(cols)", first, v);
    rows = axis == 0 ? rows + v.rows() : v.rows();
    cols = axis == 1 ? cols + v.cols() : v.cols();
    ids.push_back(p.id);
  }
  Tensor out(rows, cols);
  Eigen::Index offset = 0;
  for (Var p : parts) {
    const Tensor& v = p.value();
    if (axis == 0) {
      out.middleRows(offset, v.rows()) = v;
      offset += v.rows();
    } else {
      out.middleCols(offset, v.cols()) = v;
      offset += v.cols();
    }
  }
  return g.record("concat", std::move(out), std::move(ids), [axis](Graph& g, int self) {
    const Tensor& up = g.node_grad(self);
    Eigen::Index offset = 0;
    for (int in : g.inputs(self)) {
      const Tensor& v = g.value(in);
      if (axis == 0) {
        accumulate(g, in, up.middleRows(offset, v.rows()));
        offset += v.rows();
      } else {
        accumulate(g, in, up.middleCols(offset, v.cols()));
        offset += v.cols();
      }
    }
  });
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  if (rows <= 0 || cols <= 0 || rows * cols != av.size()) {
    throw ShapeError("reshape: cannot view " + shape_string(av) + " as [" + std::to_string(rows) +
                     "x" + std::to_string(cols) + "]");
  }
  Tensor out = Eigen::Map<const Tensor>(av.data(), rows, cols);
  return g.record("reshape", std::move(out), {a.id}, [](Graph& g, int self) {
    const int in = g.inputs(self)[0];
    const Tensor& up = g.node_grad(self);
    const Tensor& src = g.value(in);
    accumulate(g, in, Eigen::Map<const Tensor>(up.data(), src.rows(), src.cols()));
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  if (start < 0 || count <= 0 || start + count > av.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of range for " + shape_string(av));
  }
  return g.record("slice_cols", av.middleCols(start, count), {a.id},
                  [start, count](Graph& g, int self) {
                    const int in = g.inputs(self)[0];
                    const Tensor& src = g.value(in);
                    Tensor delta = Tensor::Zero(src.rows(), src.cols());
                    delta.middleCols(start, count) = g.node_grad(self);
                    accumulate(g, in, delta);
                  });
}

Var abs(Var a) {
  Graph& g = graph_of(a);
  return g.record("abs", a.value().cwiseAbs(), {a.id}, [](Graph& g, int self) {
    const int in = g.inputs(self)[0];
    // sign() is 0 at 0, which is the subgradient convention used here.
    accumulate(g, in, g.node_grad(self).cwiseProduct(g.value(in).array().sign().matrix()));
  });
}

Var elu(Var a) {
  Graph& g = graph_of(a);
  Tensor out = a.value().unaryExpr([](double x) { return elu(x); });
  return g.record("elu", std::move(out), {a.id}, [](Graph& g, int self) {
    const int in = g.inputs(self)[0];
    Tensor d = g.value(in).unaryExpr([](double x) { return elu_grad(x); });
    accumulate(g, in, g.node_grad(self).cwiseProduct(d));
  });
}

Var relu(Var a) {
  Graph& g = graph_of(a);
  return g.record("relu", a.value().cwiseMax(0.0), {a.id}, [](Graph& g, int self) {
    const int in = g.inputs(self)[0];
    Tensor d = (g.value(in).array() > 0.0).cast<double>().matrix();
    accumulate(g, in, g.node_grad(self).cwiseProduct(d));
  });
}

Var softmax_rows(Var a) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  Tensor out = (av.colwise() - av.rowwise().maxCoeff()).array().exp().matrix();
  out.array().colwise() /= out.rowwise().sum().array();
  return g.record("softmax", std::move(out), {a.id}, [](Graph& g, int self) {
    const Tensor& y = g.value(self);
    const Tensor& up = g.node_grad(self);
    Eigen::VectorXd dot = up.cwiseProduct(y).rowwise().sum();
    Tensor delta = y.cwiseProduct((up.colwise() - dot));
    accumulate(g, g.inputs(self)[0], delta);
  });
}

Var log_softmax_rows(Var a) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  Eigen::VectorXd row_max = av.rowwise().maxCoeff();
  Tensor shifted = av.colwise() - row_max;
  Eigen::VectorXd log_norm = shifted.array().exp().rowwise().sum().log().matrix();
  Tensor out = shifted.colwise() - log_norm;
  return g.record("log_softmax", std::move(out), {a.id}, [](Graph& g, int self) {
    const Tensor& y = g.value(self);
    const Tensor& up = g.node_grad(self);
    Eigen::VectorXd total = up.rowwise().sum();
    Tensor probs = y.array().exp().matrix();
    Tensor delta = up - (probs.array().colwise() * total.array()).matrix();
    accumulate(g, g.inputs(self)[0], delta);
  });
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  Tensor out(1, 1);
  out(0, 0) = a.value().sum();
  return g.record("sum", std::move(out), {a.id}, [](Graph& g, int self) {
    const int in = g.inputs(self)[0];
    const Tensor& src = g.value(in);
    accumulate(g, in, Tensor::Constant(src.rows(), src.cols(), g.node_grad(self)(0, 0)));
  });
}

Var mse(Var prediction, Var target) {
  Graph& g = graph_of(prediction, target);
  const Tensor& pv = prediction.value();
  const Tensor& tv = target.value();
  if (pv.rows() != tv.rows() || pv.cols() != tv.cols()) shape_mismatch("mse", pv, tv);
  Tensor out(1, 1);
  out(0, 0) = (pv - tv).squaredNorm() / static_cast<double>(pv.size());
  return g.record("mse", std::move(out), {prediction.id, target.id}, [](Graph& g, int self) {
    const int ip = g.inputs(self)[0];
    const int it = g.inputs(self)[1];
    const Tensor& p = g.value(ip);
    const Tensor& t = g.value(it);
    const double factor = 2.0 * g.node_grad(self)(0, 0) / static_cast<double>(p.size());
    Tensor diff = (p - t) * factor;
    if (g.needs_grad(ip)) accumulate(g, ip, diff);
    if (g.needs_grad(it)) accumulate(g, it, -diff);
  });
}

// ---------------------------------------------------------------------------

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0) || !std::isfinite(config_.learning_rate)) {
    throw std::invalid_argument("optimizer: learning rate must be positive and finite");
  }
}

void Optimizer::step(std::span<Parameter* const> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("optimizer: " + std::to_string(params.size()) + " parameters but " +
                                std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = params[i]->value;
    if (p.rows() != grads[i].rows() || p.cols() != grads[i].cols()) {
      throw ShapeError("optimizer: gradient for '" + params[i]->name + "' has shape " +
                       shape_string(grads[i]) + ", parameter is " + shape_string(p));
    }
    if (!all_finite(grads[i])) {
      throw NumericError("optimizer: non-finite gradient for parameter '" + params[i]->name + "'");
    }
  }

  ++steps_;
  if (config_.method == Method::GradientDescent) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i]->value -= config_.learning_rate * grads[i];
    }
    return;
  }

  if (first_moment_.empty()) {
    for (const Parameter* p : params) {
      first_moment_.push_back(Tensor::Zero(p->value.rows(), p->value.cols()));
      second_moment_.push_back(Tensor::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (first_moment_.size() != params.size()) {
    throw std::invalid_argument("optimizer: parameter list changed between steps");
  }
  const double t = static_cast<double>(steps_);
  const double bias1 = 1.0 - std::pow(config_.beta1, t);
  const double bias2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& m = first_moment_[i];
    Tensor& v = second_moment_[i];
    m = config_.beta1 * m + (1.0 - config_.beta1) * grads[i];
    v = config_.beta2 * v + (1.0 - config_.beta2) * grads[i].cwiseAbs2();
    params[i]->value.array() -= config_.learning_rate * (m.array() / bias1) /
                                 ((v.array() / bias2).sqrt() + config_.epsilon);
  }
}

Parameter glorot(std::string name, Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor value(rows, cols);
  for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = dist(rng);
  return Parameter{std::move(name), std::move(value)};
}

}  // namespace ma4div::diff

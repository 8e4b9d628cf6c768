#pragma once

#include "ma4div/diff.hpp"

#include <random>
#include <string>
#include <vector>

namespace ma4div {

/// Affine map x -> x W + b on row vectors.
struct DenseLayer {
  diff::Parameter weight;  // in x out
  diff::Parameter bias;    // 1 x out

  static DenseLayer init(const std::string& name, Eigen::Index in, Eigen::Index out,
                         std::mt19937_64& rng);

  Eigen::Index in_dim() const { return weight.value.rows(); }
  Eigen::Index out_dim() const { return weight.value.cols(); }

  diff::Var operator()(diff::Graph& g, diff::Var x) const {
    return diff::add(diff::matmul(x, g.parameter(weight)), g.parameter(bias));
  }
};

inline DenseLayer DenseLayer::init(const std::string& name, Eigen::Index in, Eigen::Index out,
                                   std::mt19937_64& rng) {
  return DenseLayer{diff::glorot(name + ".weight", in, out, rng),
                    diff::Parameter{name + ".bias", Tensor::Zero(1, out)}};
}

}  // namespace ma4div

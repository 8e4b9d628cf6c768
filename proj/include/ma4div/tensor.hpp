#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ma4div {

// Dense row-major storage, so Tensor::data() walks the buffer in the same
// order a checkpoint or JSON array stores it.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Tensor = MatrixX<double>;
using Vector = VectorX<double>;

/// Binary subtopic judgments, n documents by m subtopics.
using Judgments = MatrixX<int>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Derived>
std::string shape_string(const Eigen::EigenBase<Derived>& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

}  // namespace ma4div

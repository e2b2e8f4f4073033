#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>

namespace ggrnet::ad {

/// Dense row-major matrix; column vectors are n x 1.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

inline std::string shape_string(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename Derived>
std::string shape_string(const Eigen::EigenBase<Derived>& m) {
  return shape_string(m.rows(), m.cols());
}

/// Value buffer plus an optional same-shape gradient buffer.
///
/// The gradient is allocated (zeroed) iff `requires_grad`; it is empty otherwise.
template <typename Scalar>
struct Tensor {
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  bool requires_grad = false;

  Tensor() = default;

  explicit Tensor(Matrix<Scalar> v, bool needs_grad = false)
      : value(std::move(v)), requires_grad(needs_grad) {
    if (requires_grad) grad = Matrix<Scalar>::Zero(value.rows(), value.cols());
  }

  Index rows() const { return value.rows(); }
  Index cols() const { return value.cols(); }
  Index size() const { return value.size(); }

  void zero_grad() {
    if (requires_grad) grad.setZero(value.rows(), value.cols());
  }

  bool operator==(const Tensor& other) const {
    return requires_grad == other.requires_grad && value.rows() == other.value.rows() &&
           value.cols() == other.value.cols() && value == other.value;
  }
};

}  // namespace ggrnet::ad

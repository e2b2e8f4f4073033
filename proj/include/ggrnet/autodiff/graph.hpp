#pragma once

#include "ggrnet/autodiff/tensor.hpp"
#include "ggrnet/errors.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ggrnet::ad {

enum class Op : std::uint8_t {
  leaf,
  linear,
  concat,
  slice_rows,
  slice_cols,
  matmul,
  matmul_nt,
  transpose,
  add,
  sub,
  scale,
  hadamard,
  sigmoid,
  tanh,
  relu,
  add_row_broadcast,
  gather_rows,
  scatter_add_rows,
  mean_rows,
  sum,
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::linear: return "linear";
    case Op::concat: return "concat";
    case Op::slice_rows: return "slice_rows";
    case Op::slice_cols: return "slice_cols";
    case Op::matmul: return "matmul";
    case Op::matmul_nt: return "matmul_nt";
    case Op::transpose: return "transpose";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::scale: return "scale";
    case Op::hadamard: return "hadamard";
    case Op::sigmoid: return "sigmoid";
    case Op::tanh: return "tanh";
    case Op::relu: return "relu";
    case Op::add_row_broadcast: return "add_row_broadcast";
    case Op::gather_rows: return "gather_rows";
    case Op::scatter_add_rows: return "scatter_add_rows";
    case Op::mean_rows: return "mean_rows";
    case Op::sum: return "sum";
  }
  return "unknown";
}

/// Negative-control hook: perturbs the upstream gradient of one op kind by 1%.
/// Only the gradient checker's self-test should touch this.
namespace testing {
inline std::atomic<int> backward_fault{-1};
inline void inject_backward_fault(Op op) { backward_fault.store(static_cast<int>(op)); }
inline void clear_backward_fault() { backward_fault.store(-1); }
}  // namespace testing

template <typename Scalar>
class BasicGraph;

/// Handle to a node of a BasicGraph. Cheap to copy; valid while its graph lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;

  BasicGraph<Scalar>& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Matrix<Scalar>& value() const;
  const Matrix<Scalar>& grad() const;
  bool requires_grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  std::string shape() const { return shape_string(rows(), cols()); }

  /// Value of a 1x1 node.
  Scalar item() const {
    if (rows() != 1 || cols() != 1) throw DimensionError("item: expected 1x1, got " + shape());
    return value()(0, 0);
  }

 private:
  friend class BasicGraph<Scalar>;
  Var(BasicGraph<Scalar>* g, std::size_t id) : graph_(g), id_(id) {}

  BasicGraph<Scalar>* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Tape of recorded operations in insertion (= topological) order.
///
/// Every recorded value is checked for NaN/Inf; backward walks the tape in
/// reverse and checks each gradient before it is propagated further.
template <typename Scalar>
class BasicGraph {
 public:
  using Mat = Matrix<Scalar>;
  /// Adds upstream-weighted local derivatives into the inputs' gradients.
  using Backward = std::function<void(BasicGraph&, const Mat& upstream, const Mat& output)>;

  BasicGraph() = default;
  BasicGraph(const BasicGraph&) = delete;
  BasicGraph& operator=(const BasicGraph&) = delete;

  Var<Scalar> constant(Mat value) { return push(Op::leaf, std::move(value), false, {}, {}); }
  Var<Scalar> variable(Mat value) { return push(Op::leaf, std::move(value), true, {}, {}); }
  Var<Scalar> leaf(const Tensor<Scalar>& t) {
    return push(Op::leaf, t.value, t.requires_grad, {}, {});
  }

  /// Appends an op node. The output requires a gradient iff any input does.
  Var<Scalar> record(Op op, Mat value, std::initializer_list<Var<Scalar>> inputs, Backward fn) {
    return record(op, std::move(value), std::span<const Var<Scalar>>(inputs.begin(), inputs.size()), std::move(fn));
  }

  Var<Scalar> record(Op op, Mat value, std::span<const Var<Scalar>> inputs, Backward fn) {
    std::vector<std::size_t> ids;
    ids.reserve(inputs.size());
    bool needs_grad = false;
    for (const auto& in : inputs) {
      if (in.graph_ != this) throw std::invalid_argument(std::string(op_name(op)) + ": input belongs to another graph");
      ids.push_back(in.id_);
      needs_grad = needs_grad || nodes_[in.id_].tensor.requires_grad;
    }
    return push(op, std::move(value), needs_grad, std::move(ids), needs_grad ? std::move(fn) : Backward{});
  }

  /// Fills d(loss)/d(node) for every node requiring a gradient. Repeated calls accumulate.
  void backward(Var<Scalar> loss) {
    if (loss.graph_ != this) throw std::invalid_argument("backward: loss belongs to another graph");
    auto& root = nodes_[loss.id_].tensor;
    if (root.rows() != 1 || root.cols() != 1)
      throw DimensionError("backward: loss must be scalar, got " + shape_string(root.value));
    if (!root.requires_grad) return;
    root.grad(0, 0) += Scalar(1);

    const int fault = testing::backward_fault.load();
    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.tensor.requires_grad || !node.backward) continue;
      if (!node.tensor.grad.allFinite())
        throw NumericalError(std::string("non-finite gradient at ") + op_name(node.op) + " (node " +
                             std::to_string(i) + ")");
      if (fault == static_cast<int>(node.op)) {
        const Mat perturbed = node.tensor.grad * Scalar(1.01);
        node.backward(*this, perturbed, node.tensor.value);
      } else {
        node.backward(*this, node.tensor.grad, node.tensor.value);
      }
    }
  }

  template <typename Expr>
  void accumulate(const Var<Scalar>& target, const Expr& contribution) {
    auto& t = nodes_[target.id_].tensor;
    if (t.requires_grad) t.grad += contribution;
  }

  const Mat& value(const Var<Scalar>& v) const { return nodes_[v.id_].tensor.value; }
  const Mat& grad(const Var<Scalar>& v) const {
    const auto& t = nodes_[v.id_].tensor;
    if (!t.requires_grad) throw std::logic_error("grad: node does not require a gradient");
    return t.grad;
  }
  bool requires_grad(const Var<Scalar>& v) const { return nodes_[v.id_].tensor.requires_grad; }
  Op op(const Var<Scalar>& v) const { return nodes_[v.id_].op; }
  std::span<const std::size_t> inputs(const Var<Scalar>& v) const { return nodes_[v.id_].inputs; }
  std::size_t size() const { return nodes_.size(); }

  void zero_grad() {
    for (auto& n : nodes_) n.tensor.zero_grad();
  }

 private:
  struct Node {
    Op op;
    Tensor<Scalar> tensor;
    std::vector<std::size_t> inputs;
    Backward backward;
  };

  Var<Scalar> push(Op op, Mat value, bool needs_grad, std::vector<std::size_t> inputs, Backward fn) {
    const std::size_t id = nodes_.size();
    if (!value.allFinite())
      throw NumericalError(std::string(op_name(op)) + " produced a non-finite value (node " +
                           std::to_string(id) + ")");
    nodes_.push_back(Node{op, Tensor<Scalar>(std::move(value), needs_grad), std::move(inputs), std::move(fn)});
    return Var<Scalar>(this, id);
  }

  std::vector<Node> nodes_;
};

template <typename Scalar>
const Matrix<Scalar>& Var<Scalar>::value() const {
  return graph_->value(*this);
}

template <typename Scalar>
const Matrix<Scalar>& Var<Scalar>::grad() const {
  return graph_->grad(*this);
}

template <typename Scalar>
bool Var<Scalar>::requires_grad() const {
  return graph_->requires_grad(*this);
}

using Graph = BasicGraph<double>;
using Variable = Var<double>;

}  // namespace ggrnet::ad

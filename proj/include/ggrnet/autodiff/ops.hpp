#pragma once

#include "ggrnet/autodiff/graph.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace ggrnet::ad {

/// Logistic function evaluated without overflow for large |x|.
template <typename Scalar>
Scalar stable_sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

namespace detail {

template <typename Scalar>
BasicGraph<Scalar>& graph_of(const char* op, std::initializer_list<Var<Scalar>> vars) {
  BasicGraph<Scalar>* g = nullptr;
  for (const auto& v : vars) {
    if (!v.valid()) throw std::invalid_argument(std::string(op) + ": unbound variable");
    if (g == nullptr) g = &v.graph();
    if (&v.graph() != g) throw std::invalid_argument(std::string(op) + ": operands from different graphs");
  }
  return *g;
}

template <typename Scalar>
void require_same_shape(const char* op, const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape() + " vs " + b.shape());
}

template <typename Scalar>
void check_rows(const char* op, std::span<const Index> index, Index rows) {
  for (const Index i : index)
    if (i < 0 || i >= rows)
      throw DimensionError(std::string(op) + ": row index " + std::to_string(i) + " out of range [0, " +
                           std::to_string(rows) + ")");
}

}  // namespace detail

/// W x + b for a column vector x.
template <typename Scalar>
Var<Scalar> linear(const Var<Scalar>& W, const Var<Scalar>& b, const Var<Scalar>& x) {
  auto& g = detail::graph_of("linear", {W, b, x});
  if (x.cols() != 1 || b.cols() != 1 || W.cols() != x.rows() || W.rows() != b.rows())
    throw DimensionError("linear: W " + W.shape() + ", b " + b.shape() + ", x " + x.shape());
  Matrix<Scalar> out = W.value() * x.value() + b.value();
  return g.record(Op::linear, std::move(out), {W, b, x},
                  [W, b, x](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    gr.accumulate(W, up * x.value().transpose());
                    gr.accumulate(x, W.value().transpose() * up);
                    gr.accumulate(b, up);
                  });
}

/// Stacks column vectors top to bottom.
template <typename Scalar>
Var<Scalar> concat(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: empty part list");
  auto& g = parts.front().graph();
  Index total = 0;
  for (const auto& p : parts) {
    if (!p.valid() || &p.graph() != &g) throw std::invalid_argument("concat: operands from different graphs");
    if (p.cols() != 1) throw DimensionError("concat: parts must be column vectors, got " + p.shape());
    total += p.rows();
  }
  Matrix<Scalar> out(total, 1);
  Index offset = 0;
  for (const auto& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  std::vector<Var<Scalar>> kept(parts.begin(), parts.end());
  return g.record(Op::concat, std::move(out), parts,
                  [kept](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    Index off = 0;
                    for (const auto& p : kept) {
                      gr.accumulate(p, up.middleRows(off, p.rows()));
                      off += p.rows();
                    }
                  });
}

template <typename Scalar>
Var<Scalar> concat(std::initializer_list<Var<Scalar>> parts) {
  return concat(std::span<const Var<Scalar>>(parts.begin(), parts.size()));
}

template <typename Scalar>
Var<Scalar> slice_rows(const Var<Scalar>& x, Index start, Index count) {
  auto& g = detail::graph_of("slice_rows", {x});
  if (start < 0 || count < 0 || start + count > x.rows())
    throw DimensionError("slice_rows: rows [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") out of range for " + x.shape());
  Matrix<Scalar> out = x.value().middleRows(start, count);
  return g.record(Op::slice_rows, std::move(out), {x},
                  [x, start, count](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    Matrix<Scalar> full = Matrix<Scalar>::Zero(x.rows(), x.cols());
                    full.middleRows(start, count) = up;
                    gr.accumulate(x, full);
                  });
}

template <typename Scalar>
Var<Scalar> slice_cols(const Var<Scalar>& x, Index start, Index count) {
  auto& g = detail::graph_of("slice_cols", {x});
  if (start < 0 || count < 0 || start + count > x.cols())
    throw DimensionError("slice_cols: cols [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") out of range for " + x.shape());
  Matrix<Scalar> out = x.value().middleCols(start, count);
  return g.record(Op::slice_cols, std::move(out), {x},
                  [x, start, count](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    Matrix<Scalar> full = Matrix<Scalar>::Zero(x.rows(), x.cols());
                    full.middleCols(start, count) = up;
                    gr.accumulate(x, full);
                  });
}

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& g = detail::graph_of("matmul", {a, b});
  if (a.cols() != b.rows()) throw DimensionError("matmul: " + a.shape() + " * " + b.shape());
  Matrix<Scalar> out = a.value() * b.value();
  return g.record(Op::matmul, std::move(out), {a, b},
                  [a, b](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    gr.accumulate(a, up * b.value().transpose());
                    gr.accumulate(b, a.value().transpose() * up);
                  });
}

/// a * b^T: rows of `a` mapped through weights `b` stored as [out x in].
template <typename Scalar>
Var<Scalar> matmul_nt(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& g = detail::graph_of("matmul_nt", {a, b});
  if (a.cols() != b.cols()) throw DimensionError("matmul_nt: " + a.shape() + " * (" + b.shape() + ")^T");
  Matrix<Scalar> out = a.value() * b.value().transpose();
  return g.record(Op::matmul_nt, std::move(out), {a, b},
                  [a, b](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    gr.accumulate(a, up * b.value());
                    gr.accumulate(b, up.transpose() * a.value());
                  });
}

template <typename Scalar>
Var<Scalar> transpose(const Var<Scalar>& x) {
  auto& g = detail::graph_of("transpose", {x});
  Matrix<Scalar> out = x.value().transpose();
  return g.record(Op::transpose, std::move(out), {x},
                  [x](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    gr.accumulate(x, up.transpose());
                  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& g = detail::graph_of("add", {a, b});
  detail::require_same_shape("add", a, b);
  Matrix<Scalar> out = a.value() + b.value();
  return g.record(Op::add, std::move(out), {a, b},
                  [a, b](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    gr.accumulate(a, up);
                    gr.accumulate(b, up);
                  });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& g = detail::graph_of("sub", {a, b});
  detail::require_same_shape("sub", a, b);
  Matrix<Scalar> out = a.value() - b.value();
  return g.record(Op::sub, std::move(out), {a, b},
                  [a, b](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    gr.accumulate(a, up);
                    gr.accumulate(b, -up);
                  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& x, Scalar s) {
  auto& g = detail::graph_of("scale", {x});
  Matrix<Scalar> out = x.value() * s;
  return g.record(Op::scale, std::move(out), {x},
                  [x, s](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    gr.accumulate(x, up * s);
                  });
}

/// Elementwise product.
template <typename Scalar>
Var<Scalar> hadamard(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& g = detail::graph_of("hadamard", {a, b});
  detail::require_same_shape("hadamard", a, b);
  Matrix<Scalar> out = a.value().cwiseProduct(b.value());
  return g.record(Op::hadamard, std::move(out), {a, b},
                  [a, b](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    gr.accumulate(a, up.cwiseProduct(b.value()));
                    gr.accumulate(b, up.cwiseProduct(a.value()));
                  });
}

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& x) {
  auto& g = detail::graph_of("sigmoid", {x});
  Matrix<Scalar> out = x.value().unaryExpr([](Scalar v) { return stable_sigmoid(v); });
  return g.record(Op::sigmoid, std::move(out), {x},
                  [x](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>& y) {
                    gr.accumulate(x, up.cwiseProduct(y.unaryExpr([](Scalar s) { return s * (Scalar(1) - s); })));
                  });
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& x) {
  auto& g = detail::graph_of("tanh", {x});
  Matrix<Scalar> out = x.value().array().tanh().matrix();
  return g.record(Op::tanh, std::move(out), {x},
                  [x](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>& y) {
                    gr.accumulate(x, up.cwiseProduct(y.unaryExpr([](Scalar t) { return Scalar(1) - t * t; })));
                  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x) {
  auto& g = detail::graph_of("relu", {x});
  Matrix<Scalar> out = x.value().cwiseMax(Scalar(0));
  return g.record(Op::relu, std::move(out), {x},
                  [x](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    gr.accumulate(x, up.cwiseProduct(x.value().unaryExpr(
                                         [](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); })));
                  });
}

/// Adds a 1 x c row to every row of an r x c matrix.
template <typename Scalar>
Var<Scalar> add_row_broadcast(const Var<Scalar>& m, const Var<Scalar>& row) {
  auto& g = detail::graph_of("add_row_broadcast", {m, row});
  if (row.rows() != 1 || row.cols() != m.cols())
    throw DimensionError("add_row_broadcast: " + m.shape() + " + row " + row.shape());
  Matrix<Scalar> out = m.value().rowwise() + row.value().row(0);
  return g.record(Op::add_row_broadcast, std::move(out), {m, row},
                  [m, row](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    gr.accumulate(m, up);
                    gr.accumulate(row, up.colwise().sum());
                  });
}

/// out.row(i) = x.row(index[i]).
template <typename Scalar>
Var<Scalar> gather_rows(const Var<Scalar>& x, std::vector<Index> index) {
  auto& g = detail::graph_of("gather_rows", {x});
  detail::check_rows<Scalar>("gather_rows", index, x.rows());
  Matrix<Scalar> out(static_cast<Index>(index.size()), x.cols());
  for (std::size_t i = 0; i < index.size(); ++i) out.row(static_cast<Index>(i)) = x.value().row(index[i]);
  return g.record(Op::gather_rows, std::move(out), {x},
                  [x, index = std::move(index)](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    Matrix<Scalar> dx = Matrix<Scalar>::Zero(x.rows(), x.cols());
                    for (std::size_t i = 0; i < index.size(); ++i) dx.row(index[i]) += up.row(static_cast<Index>(i));
                    gr.accumulate(x, dx);
                  });
}

/// out.row(index[i]) += x.row(i), summed in ascending i; out has `rows` rows.
template <typename Scalar>
Var<Scalar> scatter_add_rows(const Var<Scalar>& x, std::vector<Index> index, Index rows) {
  auto& g = detail::graph_of("scatter_add_rows", {x});
  if (static_cast<Index>(index.size()) != x.rows())
    throw DimensionError("scatter_add_rows: " + std::to_string(index.size()) + " indices for " + x.shape());
  detail::check_rows<Scalar>("scatter_add_rows", index, rows);
  Matrix<Scalar> out = Matrix<Scalar>::Zero(rows, x.cols());
  for (std::size_t i = 0; i < index.size(); ++i) out.row(index[i]) += x.value().row(static_cast<Index>(i));
  return g.record(Op::scatter_add_rows, std::move(out), {x},
                  [x, index = std::move(index)](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    Matrix<Scalar> dx(x.rows(), x.cols());
                    for (std::size_t i = 0; i < index.size(); ++i) dx.row(static_cast<Index>(i)) = up.row(index[i]);
                    gr.accumulate(x, dx);
                  });
}

/// Column-wise mean, 1 x c.
template <typename Scalar>
Var<Scalar> mean_rows(const Var<Scalar>& x) {
  auto& g = detail::graph_of("mean_rows", {x});
  if (x.rows() == 0) throw DimensionError("mean_rows: no rows");
  Matrix<Scalar> out = x.value().colwise().mean();
  return g.record(Op::mean_rows, std::move(out), {x},
                  [x](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    const Scalar inv = Scalar(1) / static_cast<Scalar>(x.rows());
                    gr.accumulate(x, (up * inv).replicate(x.rows(), 1));
                  });
}

/// Sum of all entries, 1 x 1.
template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& x) {
  auto& g = detail::graph_of("sum", {x});
  Matrix<Scalar> out(1, 1);
  out(0, 0) = x.value().sum();
  return g.record(Op::sum, std::move(out), {x},
                  [x](BasicGraph<Scalar>& gr, const Matrix<Scalar>& up, const Matrix<Scalar>&) {
                    gr.accumulate(x, Matrix<Scalar>::Constant(x.rows(), x.cols(), up(0, 0)));
                  });
}

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) { return add(a, b); }

template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) { return sub(a, b); }

template <typename Scalar>
Var<Scalar> operator*(const Var<Scalar>& x, Scalar s) { return scale(x, s); }

template <typename Scalar>
Var<Scalar> operator*(Scalar s, const Var<Scalar>& x) { return scale(x, s); }

}  // namespace ggrnet::ad

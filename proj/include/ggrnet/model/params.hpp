#pragma once

#include "ggrnet/autodiff/tensor.hpp"
#include "ggrnet/model/config.hpp"

#include <array>
#include <cstdint>
#include <string_view>

namespace ggrnet::model {

using Tensor = ad::Tensor<double>;
using Mat = ad::Matrix<double>;

/// Every learned quantity. One message weight set serves all T steps.
struct ModelParams {
  static constexpr std::size_t tensor_count = 12;

  Tensor atom_embeddings;   // vocab x d_atom
  Tensor count_embeddings;  // count_rows x d_count, row N-1 for an N-atom molecule
  Tensor w_p, b_p;          // d_h x d_in, d_h x 1 (gate branch)
  Tensor w_q, b_q;          // d_h x d_in, d_h x 1 (tanh branch)
  Tensor mlp_w1, mlp_b1;    // d_h x d_h, d_h x 1
  Tensor mlp_w2, mlp_b2;    // d_h x d_h, d_h x 1
  Tensor mlp_w3, mlp_b3;    // 1 x d_h, 1 x 1

  std::array<Tensor*, tensor_count> tensors();
  std::array<const Tensor*, tensor_count> tensors() const;
  static const std::array<std::string_view, tensor_count>& names();

  std::size_t parameter_count() const;
  void zero_grad();

  /// Compares values only.
  bool same_values(const ModelParams& other) const;
};

/// Glorot-uniform weights and embedding tables (bound sqrt(6 / (rows + cols))),
/// zero biases. Identical for identical arguments.
ModelParams init_params(const ModelConfig& cfg, std::size_t vocab_size, std::size_t count_rows, std::uint64_t seed);

/// Zero-valued tensors with the same shapes, gradients allocated.
ModelParams zeros_like(const ModelParams& params);

}  // namespace ggrnet::model

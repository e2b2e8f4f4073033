#pragma once

#include "ggrnet/autodiff/tensor.hpp"

#include <cmath>
#include <span>
#include <stdexcept>

namespace ggrnet::ad {

/// Global L2 norm of the gradients, accumulated in parameter order.
template <typename Scalar>
Scalar global_grad_norm(std::span<Tensor<Scalar>* const> params) {
  Scalar sq = 0;
  for (const auto* p : params)
    if (p->requires_grad) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

/// Rescales all gradients by max_norm / norm when their global norm exceeds
/// max_norm. Returns the norm measured before clipping.
template <typename Scalar>
Scalar clip_global_norm(std::span<Tensor<Scalar>* const> params, Scalar max_norm) {
  if (!(max_norm > Scalar(0))) throw std::invalid_argument("clip_global_norm: max_norm must be positive");
  const Scalar norm = global_grad_norm(params);
  if (norm > max_norm) {
    const Scalar factor = max_norm / norm;
    for (auto* p : params)
      if (p->requires_grad) p->grad *= factor;
  }
  return norm;
}

/// Plain SGD: value -= lr * grad.
template <typename Scalar>
void sgd_step(std::span<Tensor<Scalar>* const> params, Scalar lr) {
  for (auto* p : params)
    if (p->requires_grad) p->value -= lr * p->grad;
}

}  // namespace ggrnet::ad

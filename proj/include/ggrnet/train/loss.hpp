#pragma once

#include "ggrnet/autodiff/graph.hpp"

#include <span>

namespace ggrnet::train {

/// alpha0 / (1 + k e), with e the zero-based epoch index.
double lr_at_epoch(double alpha0, double decay_k, std::size_t epoch);

/// Mean squared error of 1x1 predictions against constants, as a 1x1 node.
/// Throws DimensionError on a length mismatch or empty input.
ad::Variable mse_loss(ad::Graph& g, std::span<const ad::Variable> predictions, std::span<const double> targets);

double mse(std::span<const double> predictions, std::span<const double> targets);
double mae(std::span<const double> predictions, std::span<const double> targets);

}  // namespace ggrnet::train

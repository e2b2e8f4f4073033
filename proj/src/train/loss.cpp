#include "ggrnet/train/loss.hpp"

#include "ggrnet/autodiff/ops.hpp"
#include "ggrnet/errors.hpp"
#include "ggrnet/train/config.hpp"

#include <cmath>

namespace ggrnet::train {

TrainConfig TrainConfig::qm7b() {
  TrainConfig c;
  c.alpha0 = 0.03;
  c.decay_k = 0.01;
  c.epochs = 500;
  return c;
}

TrainConfig TrainConfig::qm8() { return qm7b(); }

TrainConfig TrainConfig::qm9() {
  TrainConfig c;
  c.alpha0 = 0.01;
  c.decay_k = 0.05;
  c.epochs = 200;
  return c;
}

void TrainConfig::validate() const {
  if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) throw ConfigError("train.alpha0 must be positive");
  if (!(decay_k >= 0.0) || !std::isfinite(decay_k)) throw ConfigError("train.decay_k must be non-negative");
  if (epochs < 1) throw ConfigError("train.epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be at least 1");
  if (!(clip_norm > 0.0)) throw ConfigError("train.clip_norm must be positive");
  if (target_property.empty()) throw ConfigError("train.target is not set");
  model.validate();
}

double lr_at_epoch(double alpha0, double decay_k, std::size_t epoch) {
  return alpha0 / (1.0 + decay_k * static_cast<double>(epoch));
}

namespace {

void check_lengths(const char* what, std::size_t a, std::size_t b) {
  if (a != b)
    throw DimensionError(std::string(what) + ": " + std::to_string(a) + " predictions for " + std::to_string(b) +
                         " targets");
  if (a == 0) throw DimensionError(std::string(what) + ": empty input");
}

}  // namespace

ad::Variable mse_loss(ad::Graph& g, std::span<const ad::Variable> predictions, std::span<const double> targets) {
  check_lengths("mse_loss", predictions.size(), targets.size());
  const ad::Variable stacked = ad::concat(predictions);
  const ad::Variable t = g.constant(Eigen::Map<const ad::Matrix<double>>(targets.data(), static_cast<ad::Index>(targets.size()), 1));
  const ad::Variable diff = stacked - t;
  return ad::sum(ad::hadamard(diff, diff)) * (1.0 / static_cast<double>(targets.size()));
}

double mse(std::span<const double> predictions, std::span<const double> targets) {
  check_lengths("mse", predictions.size(), targets.size());
  double s = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) s += (predictions[i] - targets[i]) * (predictions[i] - targets[i]);
  return s / static_cast<double>(targets.size());
}

double mae(std::span<const double> predictions, std::span<const double> targets) {
  check_lengths("mae", predictions.size(), targets.size());
  double s = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) s += std::abs(predictions[i] - targets[i]);
  return s / static_cast<double>(targets.size());
}

}  // namespace ggrnet::train

#pragma once

#include "ggrnet/model/config.hpp"

#include <cstdint>
#include <string>

namespace ggrnet::train {

struct TrainConfig {
  double alpha0 = 0.01;
  double decay_k = 0.05;
  std::size_t epochs = 200;
  std::size_t batch_size = 10;
  double clip_norm = 10.0;
  std::uint64_t seed = 0;
  std::string target_property;
  model::ModelConfig model;

  /// alpha0 0.03, k 0.01, 500 epochs.
  static TrainConfig qm7b();
  /// Same schedule as QM7b.
  static TrainConfig qm8();
  /// alpha0 0.01, k 0.05, 200 epochs.
  static TrainConfig qm9();

  /// Throws ConfigError.
  void validate() const;
};

}  // namespace ggrnet::train

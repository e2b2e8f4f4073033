#pragma once

#include <cstddef>

namespace ggrnet::model {

/// Architecture and feature switches. Defaults are the sizes used for all
/// three QM benchmarks.
struct ModelConfig {
  std::size_t d_atom = 50;   // atom embedding width
  std::size_t d_count = 50;  // atom-count embedding width
  std::size_t d_h = 100;     // hidden state width; also the readout MLP width
  std::size_t steps = 5;     // recursive message-passing steps T
  bool use_count_feature = true;
  bool use_distance_feature = true;
  bool use_atom_embedding = true;
  double epsilon_distance = 1e-6;

  /// Width of the message input [x_v, h_v, x_w, h_w, x_N, d_vw].
  std::size_t input_width() const { return 2 * d_atom + 2 * d_h + d_count + 1; }
  std::size_t mlp_width() const { return d_h; }

  /// Throws ConfigError on zero sizes or a non-positive epsilon.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace ggrnet::model

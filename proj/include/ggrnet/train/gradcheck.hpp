#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ggrnet::train {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t d_atom = 4;
  std::size_t d_count = 4;
  std::size_t d_h = 8;
  std::size_t steps = 3;
  std::vector<std::size_t> atom_counts = {1, 2, 4, 6};
  double step = 1e-5;
  double tolerance = 1e-4;
};

struct TensorCheck {
  std::string name;
  std::size_t atoms = 0;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
  double rel_error = 0.0;
};

struct GradcheckResult {
  std::vector<TensorCheck> checks;
  TensorCheck worst;
  bool passed = false;
};

/// Compares backpropagated gradients of the model output with central
/// differences for every parameter tensor, over one random molecule per atom
/// count. Relative error per tensor is |a - n| / max(|a|, |n|) in the Frobenius
/// norm, and 0 when both norms fall below 1e-10.
GradcheckResult run_gradcheck(const GradcheckOptions& options);

}  // namespace ggrnet::train

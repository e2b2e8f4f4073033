#pragma once

#include "ggrnet/data/molecule.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ggrnet::data {

inline constexpr const char* synthetic_geometric_property = "inv_dist_sum";
inline constexpr const char* synthetic_carbon_property = "carbon_count";

/// Random point clouds with chemically plausible spacing. Each molecule draws
/// an atom count, a length scale, and atom positions inside a ball whose
/// radius grows with the scale and cube root of the atom count, keeping every
/// pair at least `min_separation * scale` apart.
struct SyntheticOptions {
  std::size_t count = 32;
  std::size_t min_atoms = 4;
  std::size_t max_atoms = 5;
  double scale_min = 0.8;
  double scale_max = 2.0;
  double min_separation = 0.9;
  std::vector<std::string> elements = {"H", "C", "N", "O"};
  std::uint64_t seed = 0;
};

/// Targets: inv_dist_sum (sum over unordered pairs of 1/d) and carbon_count.
Dataset make_synthetic_dataset(const SyntheticOptions& options,
                               const ElementVocabulary& vocab = ElementVocabulary::standard());

}  // namespace ggrnet::data

#pragma once

#include "ggrnet/data/molecule.hpp"

#include <cstdint>
#include <vector>

namespace ggrnet::data {

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  std::uint64_t seed = 0;

  /// Each ratio in (0, 1), summing to 1 within 1e-12. Throws ConfigError.
  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// Seeded random partition of [0, n). Validation and test receive
/// floor(n * ratio) items, training receives the remainder. Each partition is
/// returned in ascending index order. Throws DataError on an empty partition.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

struct DatasetSplit {
  Dataset train, val, test;
  SplitIndices indices;
};

DatasetSplit split(const Dataset& ds, const SplitSpec& spec);

}  // namespace ggrnet::data

#include "ggrnet/data/split.hpp"

#include "ggrnet/errors.hpp"
#include "ggrnet/util/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ggrnet::data {

void SplitSpec::validate() const {
  for (const double r : {train, val, test})
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("split ratios must lie in (0, 1)");
  if (std::abs(train + val + test - 1.0) > 1e-12) throw ConfigError("split ratios must sum to 1");
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n == 0) throw DataError("cannot split an empty dataset");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(spec.seed, seed_stream::split));
  rng.shuffle(std::span<std::size_t>(perm));

  // The 1e-9 slack keeps products like 0.7 * 10 from flooring to 6.
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.val + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test + 1e-9));
  const std::size_t n_train = n - n_val - n_test;

  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                 perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  for (auto* part : {&out.train, &out.val, &out.test}) std::sort(part->begin(), part->end());

  const auto require = [n](const std::vector<std::size_t>& part, const char* name) {
    if (part.empty())
      throw DataError(std::string("split leaves the ") + name + " partition empty (" + std::to_string(n) +
                      " molecules); use a larger dataset");
  };
  require(out.train, "train");
  require(out.val, "validation");
  require(out.test, "test");
  return out;
}

DatasetSplit split(const Dataset& ds, const SplitSpec& spec) {
  auto idx = split_indices(ds.size(), spec);
  return DatasetSplit{ds.subset(idx.train), ds.subset(idx.val), ds.subset(idx.test), std::move(idx)};
}

}  // namespace ggrnet::data

#include "ggrnet/data/normalizer.hpp"

#include "ggrnet/errors.hpp"

#include <cmath>

namespace ggrnet::data {

Normalizer::Normalizer(double mean, double std) : mean_(mean), std_(std) {
  if (!std::isfinite(mean) || !std::isfinite(std) || !(std > 0.0))
    throw ConfigError("normalizer needs a finite mean and a positive standard deviation");
}

Normalizer Normalizer::fit(std::span<const double> values) {
  if (values.size() < 2) throw DataError("normalizer needs at least two training targets");
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  const double std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  if (!(std > 0.0)) throw DataError("target has zero variance over the training set (constant target)");
  return Normalizer(mean, std);
}

Normalizer fit_normalizer(const Dataset& train, const std::string& property) {
  if (!train.has_property(property)) throw DataError("training set has no property \"" + property + "\"");
  const auto values = train.targets(property);
  return Normalizer::fit(values);
}

}  // namespace ggrnet::data

#pragma once

#include "ggrnet/data/molecule.hpp"

#include <span>
#include <string>

namespace ggrnet::data {

/// Affine map of one target property to zero mean and unit (sample) variance.
class Normalizer {
 public:
  Normalizer() = default;
  /// Throws ConfigError unless std > 0 and both values are finite.
  Normalizer(double mean, double std);

  /// Sample mean and n-1 standard deviation. Needs at least two values and
  /// nonzero variance (DataError otherwise).
  static Normalizer fit(std::span<const double> values);

  double normalize(double y) const { return (y - mean_) / std_; }
  double invert(double z) const { return z * std_ + mean_; }

  double mean() const { return mean_; }
  double stddev() const { return std_; }
  bool operator==(const Normalizer&) const = default;

 private:
  double mean_ = 0.0;
  double std_ = 1.0;
};

/// Fits on the given (training) dataset only.
Normalizer fit_normalizer(const Dataset& train, const std::string& property);

}  // namespace ggrnet::data

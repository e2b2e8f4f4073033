#pragma once

#include "ggrnet/data/molecule.hpp"

#include <Eigen/Core>

#include <span>

namespace ggrnet::data {

/// Distance floor for coincident atoms, in Angstrom.
inline constexpr double default_distance_epsilon = 1e-6;

/// 1 / max(|a - b|, epsilon) with the Euclidean norm.
inline double inverse_distance(const Vec3& a, const Vec3& b, double epsilon = default_distance_epsilon) {
  const double d = (a - b).norm();
  return 1.0 / (d > epsilon ? d : epsilon);
}

/// N x N matrix of inverse distances; the diagonal is zero.
Eigen::MatrixXd inverse_distance_matrix(std::span<const Vec3> coords, double epsilon = default_distance_epsilon);

/// Sum over unordered atom pairs of 1 / distance.
double pairwise_inverse_distance_sum(std::span<const Vec3> coords, double epsilon = default_distance_epsilon);

}  // namespace ggrnet::data

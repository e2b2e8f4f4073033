#include "ggrnet/data/geometry.hpp"

namespace ggrnet::data {

Eigen::MatrixXd inverse_distance_matrix(std::span<const Vec3> coords, double epsilon) {
  const auto n = static_cast<Eigen::Index>(coords.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index v = 0; v < n; ++v)
    for (Eigen::Index w = v + 1; w < n; ++w) out(v, w) = out(w, v) = inverse_distance(coords[v], coords[w], epsilon);
  return out;
}

double pairwise_inverse_distance_sum(std::span<const Vec3> coords, double epsilon) {
  double total = 0.0;
  for (std::size_t v = 0; v < coords.size(); ++v)
    for (std::size_t w = v + 1; w < coords.size(); ++w) total += inverse_distance(coords[v], coords[w], epsilon);
  return total;
}

}  // namespace ggrnet::data

#include "ggrnet/data/synthetic.hpp"

#include "ggrnet/data/geometry.hpp"
#include "ggrnet/errors.hpp"
#include "ggrnet/util/random.hpp"

#include <cmath>

namespace ggrnet::data {

Dataset make_synthetic_dataset(const SyntheticOptions& o, const ElementVocabulary& vocab) {
  if (o.count == 0 || o.min_atoms == 0 || o.max_atoms < o.min_atoms || o.elements.empty() ||
      !(o.scale_min > 0.0) || o.scale_max < o.scale_min)
    throw ConfigError("invalid synthetic dataset options");
  Rng rng(derive_seed(o.seed, seed_stream::synthetic));
  std::vector<Molecule> molecules;
  molecules.reserve(o.count);
  for (std::size_t m = 0; m < o.count; ++m) {
    Molecule mol;
    mol.id = "synth" + std::to_string(m);
    const std::size_t n = o.min_atoms + static_cast<std::size_t>(rng.below(o.max_atoms - o.min_atoms + 1));
    const double scale = rng.uniform(o.scale_min, o.scale_max);
    const double radius = scale * std::cbrt(static_cast<double>(n));
    const double min_d = o.min_separation * scale;
    while (mol.coords.size() < n) {
      const Vec3 p(rng.uniform(-radius, radius), rng.uniform(-radius, radius), rng.uniform(-radius, radius));
      if (p.norm() > radius) continue;
      bool clear = true;
      for (const auto& q : mol.coords) clear = clear && (p - q).norm() >= min_d;
      if (!clear) continue;
      mol.coords.push_back(p);
      mol.symbols.push_back(o.elements[static_cast<std::size_t>(rng.below(o.elements.size()))]);
    }
    double carbons = 0.0;
    for (const auto& s : mol.symbols) carbons += s == "C" ? 1.0 : 0.0;
    mol.targets[synthetic_geometric_property] = pairwise_inverse_distance_sum(mol.coords);
    mol.targets[synthetic_carbon_property] = carbons;
    molecules.push_back(std::move(mol));
  }
  return Dataset(std::move(molecules), {synthetic_geometric_property, synthetic_carbon_property}, vocab);
}

}  // namespace ggrnet::data

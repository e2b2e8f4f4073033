#pragma once

#include "ggrnet/data/molecule.hpp"
#include "ggrnet/model/params.hpp"
#include "ggrnet/util/random.hpp"

#include <Eigen/Geometry>

#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <string>

namespace testutil {

using ggrnet::Rng;
using ggrnet::data::Molecule;
using ggrnet::data::Vec3;

inline const ggrnet::data::ElementVocabulary& vocab4() {
  static const ggrnet::data::ElementVocabulary v({"H", "C", "N", "O"});
  return v;
}

/// Random point cloud with pairwise separation above 0.6.
inline Molecule random_molecule(Rng& rng, std::size_t atoms, const ggrnet::data::ElementVocabulary& vocab = vocab4()) {
  Molecule m;
  m.id = "rand" + std::to_string(atoms);
  const double box = 1.0 + 0.4 * static_cast<double>(atoms);
  while (m.coords.size() < atoms) {
    const Vec3 p(rng.uniform(-box, box), rng.uniform(-box, box), rng.uniform(-box, box));
    bool ok = true;
    for (const auto& q : m.coords) ok = ok && (p - q).norm() > 0.6;
    if (!ok) continue;
    m.coords.push_back(p);
    m.symbols.push_back(vocab.symbols()[rng.below(vocab.size())]);
  }
  return m;
}

/// Every tensor, biases included, uniform in [-scale, scale].
inline void randomize(ggrnet::model::ModelParams& p, Rng& rng, double scale = 0.5) {
  for (auto* t : p.tensors())
    for (Eigen::Index i = 0; i < t->value.size(); ++i) t->value.data()[i] = rng.uniform(-scale, scale);
}

/// Uniformly random rotation (from a normalized random quaternion).
inline Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Quaterniond q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  q.normalize();
  return q.toRotationMatrix();
}

inline Molecule moved(const Molecule& m, const Eigen::Matrix3d& r, const Vec3& t) {
  Molecule out = m;
  for (auto& c : out.coords) c = r * c + t;
  return out;
}

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ggrnet_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace testutil

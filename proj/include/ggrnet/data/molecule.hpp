#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ggrnet::data {

using Vec3 = Eigen::Vector3d;

/// Ordered element symbols; position in the list is the embedding row.
class ElementVocabulary {
 public:
  ElementVocabulary() = default;
  explicit ElementVocabulary(std::vector<std::string> symbols);

  /// H, C, N, O, F, S, Cl: every element that occurs in QM7b, QM8 and QM9.
  static ElementVocabulary standard();

  std::optional<std::size_t> find(std::string_view symbol) const;
  /// Throws VocabularyError for unknown symbols.
  std::size_t index_of(std::string_view symbol) const;
  bool contains(std::string_view symbol) const { return find(symbol).has_value(); }

  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  bool operator==(const ElementVocabulary&) const = default;

 private:
  std::vector<std::string> symbols_;
};

struct Molecule {
  std::string id;
  std::vector<std::string> symbols;
  std::vector<Vec3> coords;  // Angstrom
  std::map<std::string, double> targets;

  std::size_t size() const { return symbols.size(); }
  /// Throws DataError when the property is absent.
  double target(const std::string& property) const;
};

/// Checks atom/coordinate counts, finiteness and vocabulary membership.
void validate(const Molecule& mol, const ElementVocabulary& vocab);

/// Immutable collection of molecules sharing a property list and vocabulary.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Molecule> molecules, std::vector<std::string> property_names, ElementVocabulary vocab,
          std::map<std::string, std::string> units = {});

  const std::vector<Molecule>& molecules() const { return molecules_; }
  const Molecule& operator[](std::size_t i) const { return molecules_[i]; }
  const std::vector<std::string>& property_names() const { return property_names_; }
  const ElementVocabulary& vocabulary() const { return vocab_; }
  /// Unit string for a property, empty when unknown.
  std::string unit(const std::string& property) const;
  const std::map<std::string, std::string>& units() const { return units_; }
  std::size_t max_atom_count() const { return max_atom_count_; }
  std::size_t size() const { return molecules_.size(); }
  bool empty() const { return molecules_.empty(); }
  bool has_property(const std::string& name) const;

  std::vector<double> targets(const std::string& property) const;
  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<Molecule> molecules_;
  std::vector<std::string> property_names_;
  ElementVocabulary vocab_;
  std::map<std::string, std::string> units_;
  std::size_t max_atom_count_ = 0;
};

}  // namespace ggrnet::data

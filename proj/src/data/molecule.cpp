#include "ggrnet/data/molecule.hpp"

#include "ggrnet/errors.hpp"

#include <algorithm>
#include <set>

namespace ggrnet::data {

ElementVocabulary::ElementVocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty()) throw ConfigError("element vocabulary is empty");
  std::set<std::string> seen;
  for (const auto& s : symbols_) {
    if (s.empty()) throw ConfigError("element vocabulary contains an empty symbol");
    if (!seen.insert(s).second) throw ConfigError("duplicate element symbol \"" + s + "\" in vocabulary");
  }
}

ElementVocabulary ElementVocabulary::standard() { return ElementVocabulary({"H", "C", "N", "O", "F", "S", "Cl"}); }

std::optional<std::size_t> ElementVocabulary::find(std::string_view symbol) const {
  const auto it = std::find(symbols_.begin(), symbols_.end(), symbol);
  if (it == symbols_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - symbols_.begin());
}

std::size_t ElementVocabulary::index_of(std::string_view symbol) const {
  if (auto i = find(symbol)) return *i;
  throw VocabularyError(std::string(symbol));
}

double Molecule::target(const std::string& property) const {
  const auto it = targets.find(property);
  if (it == targets.end()) throw DataError("molecule " + id + " has no property \"" + property + "\"");
  return it->second;
}

void validate(const Molecule& mol, const ElementVocabulary& vocab) {
  if (mol.symbols.empty()) throw DataError("molecule " + mol.id + " has no atoms");
  if (mol.symbols.size() != mol.coords.size())
    throw DataError("molecule " + mol.id + ": " + std::to_string(mol.symbols.size()) + " symbols but " +
                    std::to_string(mol.coords.size()) + " coordinates");
  for (const auto& s : mol.symbols) vocab.index_of(s);
  for (const auto& c : mol.coords)
    if (!c.allFinite()) throw DataError("molecule " + mol.id + " has a non-finite coordinate");
}

Dataset::Dataset(std::vector<Molecule> molecules, std::vector<std::string> property_names, ElementVocabulary vocab,
                 std::map<std::string, std::string> units)
    : molecules_(std::move(molecules)),
      property_names_(std::move(property_names)),
      vocab_(std::move(vocab)),
      units_(std::move(units)) {
  for (const auto& mol : molecules_) {
    validate(mol, vocab_);
    for (const auto& p : property_names_)
      if (!mol.targets.contains(p)) throw DataError("molecule " + mol.id + " is missing property \"" + p + "\"");
    max_atom_count_ = std::max(max_atom_count_, mol.size());
  }
}

std::string Dataset::unit(const std::string& property) const {
  const auto it = units_.find(property);
  return it == units_.end() ? std::string{} : it->second;
}

bool Dataset::has_property(const std::string& name) const {
  return std::find(property_names_.begin(), property_names_.end(), name) != property_names_.end();
}

std::vector<double> Dataset::targets(const std::string& property) const {
  std::vector<double> out;
  out.reserve(molecules_.size());
  for (const auto& mol : molecules_) out.push_back(mol.target(property));
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Molecule> picked;
  picked.reserve(indices.size());
  for (const auto i : indices) {
    if (i >= molecules_.size()) throw std::out_of_range("Dataset::subset: index " + std::to_string(i));
    picked.push_back(molecules_[i]);
  }
  return Dataset(std::move(picked), property_names_, vocab_, units_);
}

}  // namespace ggrnet::data

#include "ggrnet/data/schema.hpp"

#include "ggrnet/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace ggrnet::data {

std::vector<std::string> PropertySchema::names() const {
  std::vector<std::string> out;
  out.reserve(properties.size());
  for (const auto& p : properties) out.push_back(p.name);
  return out;
}

const PropertyColumn* PropertySchema::find(std::string_view name) const {
  for (const auto& p : properties)
    if (p.name == name) return &p;
  return nullptr;
}

PropertySchema PropertySchema::qm9() {
  PropertySchema s;
  s.id_column = 1;
  s.properties = {
      {"mu", 5, "Debye"},      {"alpha", 6, "Bohr^3"},  {"HOMO", 7, "Hartree"},       {"LUMO", 8, "Hartree"},
      {"gap", 9, "Hartree"},   {"R2", 10, "Bohr^2"},    {"ZPVE", 11, "Hartree"},      {"U0", 12, "Hartree"},
      {"U", 13, "Hartree"},    {"H", 14, "Hartree"},    {"G", 15, "Hartree"},         {"Cv", 16, "cal/(mol K)"},
  };
  return s;
}

PropertySchema parse_schema(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("schema: invalid JSON: ") + e.what());
  }
  PropertySchema s;
  try {
    if (j.contains("id_column") && !j.at("id_column").is_null()) s.id_column = j.at("id_column").get<std::size_t>();
    std::set<std::string> seen;
    for (const auto& p : j.at("properties")) {
      PropertyColumn col{p.at("name").get<std::string>(), p.at("column").get<std::size_t>(), p.value("unit", "")};
      if (col.name.empty()) throw ConfigError("schema: property with empty name");
      if (!seen.insert(col.name).second) throw ConfigError("schema: duplicate property \"" + col.name + "\"");
      s.properties.push_back(std::move(col));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("schema: ") + e.what());
  }
  return s;
}

PropertySchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open schema file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_schema(buf.str());
}

std::string format_schema(const PropertySchema& schema) {
  nlohmann::ordered_json j;
  j["id_column"] = schema.id_column ? nlohmann::ordered_json(*schema.id_column) : nlohmann::ordered_json(nullptr);
  j["properties"] = nlohmann::ordered_json::array();
  for (const auto& p : schema.properties) j["properties"].push_back({{"name", p.name}, {"column", p.column}, {"unit", p.unit}});
  return j.dump(2) + "\n";
}

}  // namespace ggrnet::data

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ggrnet::data {

/// One named scalar on an extended-XYZ comment line. Units are metadata only.
struct PropertyColumn {
  std::string name;
  std::size_t column = 0;  // 0-based whitespace-separated field index
  std::string unit;
};

/// Maps comment-line fields to the molecule id and named targets.
struct PropertySchema {
  std::optional<std::size_t> id_column;
  std::vector<PropertyColumn> properties;

  std::vector<std::string> names() const;
  const PropertyColumn* find(std::string_view name) const;

  /// The 17-field QM9 comment line: "gdb <id> A B C mu alpha HOMO LUMO gap R2 ZPVE U0 U H G Cv".
  static PropertySchema qm9();
};

/// JSON: {"id_column": 1, "properties": [{"name": "mu", "column": 5, "unit": "Debye"}, ...]}
PropertySchema parse_schema(std::string_view json_text);
PropertySchema load_schema(const std::filesystem::path& path);
std::string format_schema(const PropertySchema& schema);

}  // namespace ggrnet::data

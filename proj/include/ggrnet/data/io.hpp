#pragma once

#include "ggrnet/data/molecule.hpp"
#include "ggrnet/data/schema.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ggrnet::data {

/// Parses one real number. Rejects NaN/Inf and trailing garbage; accepts the
/// Mathematica exponent form "1.5*^-6" that appears in the QM9 distribution.
std::optional<double> parse_real(std::string_view token);

/// One extended-XYZ molecule:
///   line 1       atom count N
///   line 2       whitespace-separated property record, mapped by `schema`
///   lines 3..N+2 "symbol x y z [ignored columns]"
/// Lines after the atom block (QM9 frequencies, SMILES, InChI) are ignored.
/// LF and CRLF line endings are both accepted. `fallback_id` is used when the
/// schema has no id column.
Molecule parse_extended_xyz(std::string_view text, const PropertySchema& schema, const ElementVocabulary& vocab,
                            std::string_view fallback_id = {});

/// Concatenated extended-XYZ frames. Non-atom lines between frames are skipped;
/// an atom-shaped line beyond a frame's declared count is an error.
std::vector<Molecule> parse_xyz_frames(std::string_view text, const PropertySchema& schema,
                                       const ElementVocabulary& vocab, std::string_view id_prefix = {});

/// Inverse of parse_extended_xyz for the given schema; numbers are written in
/// shortest round-trip form. Schema columns not mapped to a property are
/// written as 0.
std::string format_extended_xyz(const Molecule& mol, const PropertySchema& schema);

/// Delimiter-separated records, one molecule each, with header row. Required
/// columns "symbols" (space-separated) and "coords" (3N space-separated reals);
/// optional "id"; every other column is a property, optionally annotated with
/// its unit as "name[unit]".
Dataset parse_tabular(std::string_view text, const ElementVocabulary& vocab, char delimiter = ',');
std::string format_tabular(const Dataset& ds, char delimiter = ',');

enum class DataFormat { xyz, tabular };

std::optional<DataFormat> parse_data_format(std::string_view name);
/// .csv / .tsv files are tabular; everything else (including directories) is XYZ.
DataFormat infer_data_format(const std::filesystem::path& path);

struct DataSource {
  std::filesystem::path path;
  std::optional<DataFormat> format;
  std::optional<PropertySchema> schema;  // XYZ only; empty schema when absent
  ElementVocabulary vocab = ElementVocabulary::standard();
  std::size_t threads = 1;
};

/// Loads a directory of .xyz files (sorted by file name, one molecule per
/// file, parsed in parallel), a multi-frame .xyz file, or a tabular file.
/// Throws DataError naming the path when it does not exist.
Dataset load_dataset(const DataSource& source);

std::string read_file(const std::filesystem::path& path);

}  // namespace ggrnet::data

#include "ggrnet/data/io.hpp"

#include "ggrnet/errors.hpp"
#include "ggrnet/util/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace ggrnet::data {
namespace {

struct Line {
  std::size_t number;  // 1-based
  std::string_view text;
};

std::vector<Line> split_lines(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<Line> lines;
  std::size_t number = 1;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back({number++, line});
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> fields(std::string_view s, char delimiter) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = s.find(delimiter);
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

std::optional<std::size_t> parse_count(std::string_view token) {
  std::size_t n = 0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, n);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return n;
}

bool looks_like_symbol(std::string_view t) {
  return !t.empty() && t.size() <= 3 && std::isupper(static_cast<unsigned char>(t[0])) &&
         std::all_of(t.begin() + 1, t.end(), [](char c) { return std::islower(static_cast<unsigned char>(c)); });
}

bool looks_like_atom_line(std::string_view line) {
  const auto t = tokens(line);
  return t.size() >= 4 && looks_like_symbol(t[0]) && parse_real(t[1]) && parse_real(t[2]) && parse_real(t[3]);
}

std::string shortest(double v) { return fmt::format("{}", v); }

/// Parses the frame starting at lines[pos]; leaves pos just past the atom block.
Molecule parse_frame(const std::vector<Line>& lines, std::size_t& pos, const PropertySchema& schema,
                     const ElementVocabulary& vocab, std::string_view fallback_id) {
  const std::size_t header_line = pos < lines.size() ? lines[pos].number : 1;
  if (pos >= lines.size()) throw ParseError("expected atom count, got end of input", header_line);
  const auto count_text = trim(lines[pos].text);
  const auto count = parse_count(count_text);
  if (!count) throw ParseError("expected atom count, got \"" + std::string(count_text) + "\"", header_line);
  if (*count == 0) throw ParseError("atom count must be at least 1", header_line);
  ++pos;

  if (pos >= lines.size()) throw ParseError("expected property record, got end of input", header_line + 1);
  const Line record = lines[pos++];
  const auto props = tokens(record.text);

  Molecule mol;
  if (schema.id_column) {
    if (*schema.id_column >= props.size())
      throw ParseError("property record has " + std::to_string(props.size()) + " fields; id expects column " +
                           std::to_string(*schema.id_column),
                       record.number);
    mol.id = std::string(props[*schema.id_column]);
  } else {
    mol.id = std::string(fallback_id);
  }
  for (const auto& col : schema.properties) {
    if (col.column >= props.size())
      throw ParseError("property record has " + std::to_string(props.size()) + " fields; \"" + col.name +
                           "\" expects column " + std::to_string(col.column),
                       record.number);
    const auto v = parse_real(props[col.column]);
    if (!v)
      throw ParseError("property \"" + col.name + "\" is not a finite number: \"" + std::string(props[col.column]) +
                           "\"",
                       record.number);
    mol.targets[col.name] = *v;
  }

  mol.symbols.reserve(*count);
  mol.coords.reserve(*count);
  for (std::size_t k = 0; k < *count; ++k) {
    if (pos >= lines.size()) {
      const std::size_t expected = lines.empty() ? 1 : lines.back().number + 1;
      throw ParseError("expected atom line " + std::to_string(k + 1) + " of " + std::to_string(*count) +
                           ", got end of input",
                       expected);
    }
    const Line atom = lines[pos++];
    const auto t = tokens(atom.text);
    if (t.size() < 4)
      throw ParseError("atom line needs \"symbol x y z\", got \"" + std::string(trim(atom.text)) + "\"", atom.number);
    const std::string symbol(t[0]);
    if (!vocab.contains(symbol)) throw VocabularyError(symbol, atom.number);
    Vec3 xyz;
    for (int d = 0; d < 3; ++d) {
      const auto v = parse_real(t[1 + d]);
      if (!v) throw ParseError("non-numeric coordinate \"" + std::string(t[1 + d]) + "\"", atom.number);
      xyz[d] = *v;
    }
    mol.symbols.push_back(symbol);
    mol.coords.push_back(xyz);
  }
  return mol;
}

/// Skips trailing non-atom lines; stops at the next count line when `stop_at_count`.
void skip_trailer(const std::vector<Line>& lines, std::size_t& pos, std::size_t declared, bool stop_at_count) {
  while (pos < lines.size()) {
    const auto text = trim(lines[pos].text);
    if (stop_at_count && parse_count(text)) return;
    if (looks_like_atom_line(text))
      throw ParseError("atom line beyond the declared count of " + std::to_string(declared), lines[pos].number);
    ++pos;
  }
}

std::pair<std::string, std::string> split_unit(std::string_view header) {
  const auto open = header.find('[');
  if (open == std::string_view::npos || header.back() != ']') return {std::string(header), {}};
  return {std::string(trim(header.substr(0, open))), std::string(header.substr(open + 1, header.size() - open - 2))};
}

}  // namespace

std::optional<double> parse_real(std::string_view token) {
  std::string buf(token);
  if (const auto m = buf.find("*^"); m != std::string::npos) buf.replace(m, 2, "e");
  const char* begin = buf.data();
  const char* end = buf.data() + buf.size();
  if (begin != end && *begin == '+') ++begin;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end || begin == end || !std::isfinite(v)) return std::nullopt;
  return v;
}

Molecule parse_extended_xyz(std::string_view text, const PropertySchema& schema, const ElementVocabulary& vocab,
                            std::string_view fallback_id) {
  const auto lines = split_lines(text);
  std::size_t pos = 0;
  Molecule mol = parse_frame(lines, pos, schema, vocab, fallback_id);
  skip_trailer(lines, pos, mol.size(), false);
  return mol;
}

std::vector<Molecule> parse_xyz_frames(std::string_view text, const PropertySchema& schema,
                                       const ElementVocabulary& vocab, std::string_view id_prefix) {
  const auto lines = split_lines(text);
  std::vector<Molecule> out;
  std::size_t pos = 0;
  while (true) {
    while (pos < lines.size() && trim(lines[pos].text).empty()) ++pos;
    if (pos >= lines.size()) break;
    const std::string fallback = std::string(id_prefix) + std::to_string(out.size());
    out.push_back(parse_frame(lines, pos, schema, vocab, fallback));
    skip_trailer(lines, pos, out.back().size(), true);
  }
  if (out.empty()) throw ParseError("no molecules in input");
  return out;
}

std::string format_extended_xyz(const Molecule& mol, const PropertySchema& schema) {
  std::size_t width = schema.id_column ? *schema.id_column + 1 : 0;
  for (const auto& c : schema.properties) width = std::max(width, c.column + 1);
  std::vector<std::string> record(width, "0");
  if (schema.id_column) record[*schema.id_column] = mol.id.empty() ? "0" : mol.id;
  for (const auto& c : schema.properties) record[c.column] = shortest(mol.target(c.name));

  std::string out = std::to_string(mol.size()) + "\n";
  for (std::size_t i = 0; i < record.size(); ++i) out += (i ? "\t" : "") + record[i];
  out += "\n";
  for (std::size_t a = 0; a < mol.size(); ++a)
    out += fmt::format("{}\t{}\t{}\t{}\n", mol.symbols[a], shortest(mol.coords[a].x()), shortest(mol.coords[a].y()),
                       shortest(mol.coords[a].z()));
  return out;
}

Dataset parse_tabular(std::string_view text, const ElementVocabulary& vocab, char delimiter) {
  const auto lines = split_lines(text);
  std::size_t pos = 0;
  while (pos < lines.size() && trim(lines[pos].text).empty()) ++pos;
  if (pos >= lines.size()) throw ParseError("no records");
  const Line header_line = lines[pos++];
  const auto header = fields(header_line.text, delimiter);

  std::optional<std::size_t> id_col, sym_col, xyz_col;
  std::vector<std::pair<std::size_t, std::string>> prop_cols;
  std::map<std::string, std::string> units;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto h = header[c];
    if (h == "id") id_col = c;
    else if (h == "symbols") sym_col = c;
    else if (h == "coords") xyz_col = c;
    else {
      auto [name, unit] = split_unit(h);
      if (name.empty()) throw ParseError("empty column name in header", header_line.number);
      if (!unit.empty()) units[name] = unit;
      prop_cols.emplace_back(c, std::move(name));
    }
  }
  if (!sym_col || !xyz_col) throw ParseError("header must contain \"symbols\" and \"coords\" columns", header_line.number);

  std::vector<Molecule> molecules;
  std::size_t record_index = 0;
  for (; pos < lines.size(); ++pos) {
    const Line line = lines[pos];
    if (trim(line.text).empty()) continue;
    ++record_index;
    const auto f = fields(line.text, delimiter);
    if (f.size() != header.size())
      throw ParseError("record " + std::to_string(record_index) + " has " + std::to_string(f.size()) +
                           " fields, header declares " + std::to_string(header.size()),
                       line.number);
    Molecule mol;
    mol.id = id_col ? std::string(f[*id_col]) : "record" + std::to_string(record_index);
    for (const auto s : tokens(f[*sym_col])) {
      if (!vocab.contains(s)) throw VocabularyError(std::string(s), line.number);
      mol.symbols.emplace_back(s);
    }
    const auto xyz = tokens(f[*xyz_col]);
    if (mol.symbols.empty()) throw ParseError("record " + std::to_string(record_index) + " has no atoms", line.number);
    if (xyz.size() != 3 * mol.symbols.size())
      throw ParseError("record " + std::to_string(record_index) + " has " + std::to_string(mol.symbols.size()) +
                           " atoms but " + std::to_string(xyz.size()) + " coordinate values",
                       line.number);
    for (std::size_t a = 0; a < mol.symbols.size(); ++a) {
      Vec3 p;
      for (int d = 0; d < 3; ++d) {
        const auto v = parse_real(xyz[3 * a + d]);
        if (!v) throw ParseError("non-numeric coordinate \"" + std::string(xyz[3 * a + d]) + "\"", line.number);
        p[d] = *v;
      }
      mol.coords.push_back(p);
    }
    for (const auto& [c, name] : prop_cols) {
      const auto v = parse_real(f[c]);
      if (!v)
        throw ParseError("property \"" + name + "\" is not a finite number: \"" + std::string(f[c]) + "\"", line.number);
      mol.targets[name] = *v;
    }
    molecules.push_back(std::move(mol));
  }
  if (molecules.empty()) throw ParseError("no records");

  std::vector<std::string> names;
  for (const auto& pc : prop_cols) names.push_back(pc.second);
  return Dataset(std::move(molecules), std::move(names), vocab, std::move(units));
}

std::string format_tabular(const Dataset& ds, char delimiter) {
  const std::string d(1, delimiter);
  std::string out = "id" + d + "symbols" + d + "coords";
  for (const auto& p : ds.property_names()) {
    const auto u = ds.unit(p);
    out += d + p + (u.empty() ? "" : "[" + u + "]");
  }
  out += "\n";
  for (const auto& mol : ds.molecules()) {
    out += mol.id + d;
    for (std::size_t a = 0; a < mol.size(); ++a) out += (a ? " " : "") + mol.symbols[a];
    out += d;
    for (std::size_t a = 0; a < mol.size(); ++a)
      out += fmt::format("{}{} {} {}", a ? " " : "", shortest(mol.coords[a].x()), shortest(mol.coords[a].y()),
                         shortest(mol.coords[a].z()));
    for (const auto& p : ds.property_names()) out += d + shortest(mol.target(p));
    out += "\n";
  }
  return out;
}

std::optional<DataFormat> parse_data_format(std::string_view name) {
  if (name == "xyz") return DataFormat::xyz;
  if (name == "tabular" || name == "csv") return DataFormat::tabular;
  return std::nullopt;
}

DataFormat infer_data_format(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".csv" || ext == ".tsv") ? DataFormat::tabular : DataFormat::xyz;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Dataset load_dataset(const DataSource& source) {
  namespace fs = std::filesystem;
  if (!fs::exists(source.path)) throw DataError("dataset path not found: " + source.path.string());
  const DataFormat format = source.format.value_or(infer_data_format(source.path));
  const PropertySchema schema = source.schema.value_or(PropertySchema{});

  auto rethrow_in = [](const std::string& context, auto&& fn) {
    try {
      return fn();
    } catch (const ParseError& e) {
      throw ParseError(e.detail(), e.line(), context);
    } catch (const VocabularyError& e) {
      throw VocabularyError(e.symbol(), e.line(), context);
    }
  };

  std::map<std::string, std::string> units;
  for (const auto& c : schema.properties)
    if (!c.unit.empty()) units[c.name] = c.unit;

  if (format == DataFormat::tabular) {
    if (fs::is_directory(source.path)) throw DataError("tabular dataset must be a file: " + source.path.string());
    const auto text = read_file(source.path);
    const char delim = source.path.extension() == ".tsv" ? '\t' : ',';
    return rethrow_in(source.path.string(), [&] { return parse_tabular(text, source.vocab, delim); });
  }

  if (fs::is_directory(source.path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(source.path))
      if (entry.is_regular_file() && entry.path().extension() == ".xyz") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .xyz files in " + source.path.string());
    std::vector<Molecule> molecules(files.size());
    parallel_for(files.size(), source.threads, [&](std::size_t i) {
      const auto text = read_file(files[i]);
      molecules[i] = rethrow_in(files[i].string(), [&] {
        return parse_extended_xyz(text, schema, source.vocab, files[i].stem().string());
      });
    });
    return Dataset(std::move(molecules), schema.names(), source.vocab, std::move(units));
  }

  const auto text = read_file(source.path);
  auto molecules = rethrow_in(source.path.string(), [&] {
    return parse_xyz_frames(text, schema, source.vocab, source.path.stem().string() + "_");
  });
  return Dataset(std::move(molecules), schema.names(), source.vocab, std::move(units));
}

}  // namespace ggrnet::data

#include "ggrnet/cli/config.hpp"

#include "ggrnet/errors.hpp"

#include <fmt/format.h>

#include <charconv>
#include <functional>
#include <map>

namespace ggrnet::cli {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string quoted(std::string_view key) { return "\"" + std::string(key) + "\""; }

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
    throw ConfigError(quoted(key) + " expects a non-negative integer, got \"" + std::string(v) + "\"");
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
    throw ConfigError(quoted(key) + " expects a non-negative integer, got \"" + std::string(v) + "\"");
  return out;
}

double to_real(std::string_view key, std::string_view v) {
  const auto r = data::parse_real(v);
  if (!r) throw ConfigError(quoted(key) + " expects a finite number, got \"" + std::string(v) + "\"");
  return *r;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(quoted(key) + " expects true or false, got \"" + std::string(v) + "\"");
}

fs::path to_path(std::string_view v, const fs::path& base) {
  fs::path p{std::string(v)};
  if (p.is_relative()) p = base / p;
  return fs::absolute(p).lexically_normal();
}

std::vector<std::string> to_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto item = trim(v.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value, const fs::path& base)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
  std::string name;
  Setter set;
  Getter get;
};

std::string fmt_real(double v) { return fmt::format("{}", v); }
std::string fmt_bool(bool v) { return v ? "true" : "false"; }

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys = {
      {"data.path", [](RunConfig& c, auto, auto v, const auto& b) { c.data_path = v.empty() ? fs::path{} : to_path(v, b); },
       [](const RunConfig& c) { return c.data_path.generic_string(); }},
      {"data.format",
       [](RunConfig& c, auto k, auto v, const auto&) {
         if (v != "auto" && !data::parse_data_format(v))
           throw ConfigError(quoted(k) + " must be auto, xyz or tabular, got \"" + std::string(v) + "\"");
         c.data_format = std::string(v);
       },
       [](const RunConfig& c) { return c.data_format; }},
      {"data.schema",
       [](RunConfig& c, auto, auto v, const auto& b) {
         c.schema = v.empty() || v == "qm9" ? std::string(v) : to_path(v, b).generic_string();
       },
       [](const RunConfig& c) { return c.schema; }},
      {"data.elements",
       [](RunConfig& c, auto k, auto v, const auto&) {
         c.elements = to_list(v);
         if (c.elements.empty()) throw ConfigError(quoted(k) + " lists no elements");
       },
       [](const RunConfig& c) {
         std::string s;
         for (const auto& e : c.elements) s += (s.empty() ? "" : ",") + e;
         return s;
       }},
      {"split.train", [](RunConfig& c, auto k, auto v, const auto&) { c.split.train = to_real(k, v); },
       [](const RunConfig& c) { return fmt_real(c.split.train); }},
      {"split.val", [](RunConfig& c, auto k, auto v, const auto&) { c.split.val = to_real(k, v); },
       [](const RunConfig& c) { return fmt_real(c.split.val); }},
      {"split.test", [](RunConfig& c, auto k, auto v, const auto&) { c.split.test = to_real(k, v); },
       [](const RunConfig& c) { return fmt_real(c.split.test); }},
      {"split.seed", [](RunConfig& c, auto k, auto v, const auto&) { c.split.seed = to_u64(k, v); },
       [](const RunConfig& c) { return std::to_string(c.split.seed); }},
      {"split.resplit", [](RunConfig& c, auto k, auto v, const auto&) { c.resplit = to_bool(k, v); },
       [](const RunConfig& c) { return fmt_bool(c.resplit); }},
      {"train.target", [](RunConfig& c, auto, auto v, const auto&) { c.train.target_property = std::string(v); },
       [](const RunConfig& c) { return c.train.target_property; }},
      {"train.alpha0", [](RunConfig& c, auto k, auto v, const auto&) { c.train.alpha0 = to_real(k, v); },
       [](const RunConfig& c) { return fmt_real(c.train.alpha0); }},
      {"train.decay_k", [](RunConfig& c, auto k, auto v, const auto&) { c.train.decay_k = to_real(k, v); },
       [](const RunConfig& c) { return fmt_real(c.train.decay_k); }},
      {"train.epochs", [](RunConfig& c, auto k, auto v, const auto&) { c.train.epochs = to_size(k, v); },
       [](const RunConfig& c) { return std::to_string(c.train.epochs); }},
      {"train.batch_size", [](RunConfig& c, auto k, auto v, const auto&) { c.train.batch_size = to_size(k, v); },
       [](const RunConfig& c) { return std::to_string(c.train.batch_size); }},
      {"train.clip_norm", [](RunConfig& c, auto k, auto v, const auto&) { c.train.clip_norm = to_real(k, v); },
       [](const RunConfig& c) { return fmt_real(c.train.clip_norm); }},
      {"train.seed", [](RunConfig& c, auto k, auto v, const auto&) { c.train.seed = to_u64(k, v); },
       [](const RunConfig& c) { return std::to_string(c.train.seed); }},
      {"model.d_atom", [](RunConfig& c, auto k, auto v, const auto&) { c.train.model.d_atom = to_size(k, v); },
       [](const RunConfig& c) { return std::to_string(c.train.model.d_atom); }},
      {"model.d_count", [](RunConfig& c, auto k, auto v, const auto&) { c.train.model.d_count = to_size(k, v); },
       [](const RunConfig& c) { return std::to_string(c.train.model.d_count); }},
      {"model.d_h", [](RunConfig& c, auto k, auto v, const auto&) { c.train.model.d_h = to_size(k, v); },
       [](const RunConfig& c) { return std::to_string(c.train.model.d_h); }},
      {"model.T", [](RunConfig& c, auto k, auto v, const auto&) { c.train.model.steps = to_size(k, v); },
       [](const RunConfig& c) { return std::to_string(c.train.model.steps); }},
      {"model.use_count_feature",
       [](RunConfig& c, auto k, auto v, const auto&) { c.train.model.use_count_feature = to_bool(k, v); },
       [](const RunConfig& c) { return fmt_bool(c.train.model.use_count_feature); }},
      {"model.use_distance_feature",
       [](RunConfig& c, auto k, auto v, const auto&) { c.train.model.use_distance_feature = to_bool(k, v); },
       [](const RunConfig& c) { return fmt_bool(c.train.model.use_distance_feature); }},
      {"model.use_atom_embedding",
       [](RunConfig& c, auto k, auto v, const auto&) { c.train.model.use_atom_embedding = to_bool(k, v); },
       [](const RunConfig& c) { return fmt_bool(c.train.model.use_atom_embedding); }},
      {"model.epsilon_distance",
       [](RunConfig& c, auto k, auto v, const auto&) { c.train.model.epsilon_distance = to_real(k, v); },
       [](const RunConfig& c) { return fmt_real(c.train.model.epsilon_distance); }},
      {"run.out", [](RunConfig& c, auto, auto v, const auto& b) { c.out = to_path(v, b); },
       [](const RunConfig& c) { return c.out.generic_string(); }},
      {"run.threads", [](RunConfig& c, auto k, auto v, const auto&) { c.threads = to_size(k, v); },
       [](const RunConfig& c) { return std::to_string(c.threads); }},
      {"run.runs", [](RunConfig& c, auto k, auto v, const auto&) { c.runs = to_size(k, v); },
       [](const RunConfig& c) { return std::to_string(c.runs); }},
  };
  return keys;
}

}  // namespace

data::DataSource RunConfig::data_source() const {
  data::DataSource src;
  src.path = data_path;
  if (data_format != "auto") src.format = data::parse_data_format(data_format);
  if (schema == "qm9")
    src.schema = data::PropertySchema::qm9();
  else if (!schema.empty())
    src.schema = data::load_schema(schema);
  src.vocab = data::ElementVocabulary(elements);
  src.threads = threads;
  return src;
}

void RunConfig::validate() const {
  if (data_path.empty()) throw ConfigError("data.path is not set");
  if (threads == 0) throw ConfigError("run.threads must be at least 1");
  if (runs == 0) throw ConfigError("run.runs must be at least 1");
  split.validate();
  train.validate();
  (void)data::ElementVocabulary(elements);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& k : key_table()) n.push_back(k.name);
    return n;
  }();
  return names;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value, const fs::path& base_dir) {
  value = trim(value);
  if (key == "train.preset") {
    train::TrainConfig preset;
    if (value == "qm7b")
      preset = train::TrainConfig::qm7b();
    else if (value == "qm8")
      preset = train::TrainConfig::qm8();
    else if (value == "qm9")
      preset = train::TrainConfig::qm9();
    else
      throw ConfigError("\"train.preset\" must be qm7b, qm8 or qm9, got \"" + std::string(value) + "\"");
    cfg.train.alpha0 = preset.alpha0;
    cfg.train.decay_k = preset.decay_k;
    cfg.train.epochs = preset.epochs;
    cfg.train.batch_size = preset.batch_size;
    cfg.train.clip_norm = preset.clip_norm;
    return;
  }
  for (const auto& k : key_table())
    if (k.name == key) {
      k.set(cfg, key, value, base_dir);
      return;
    }
  throw ConfigError("unknown configuration key \"" + std::string(key) + "\"");
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text, std::string_view context) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  const std::string prefix = context.empty() ? std::string{} : std::string(context) + ": ";
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(prefix + "line " + std::to_string(line_no) + ": expected \"key = value\"");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(prefix + "line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  const std::string text = data::read_file(path);
  const fs::path base = fs::absolute(path).parent_path();
  RunConfig cfg;
  for (const auto& [k, v] : parse_key_values(text, path.string())) {
    try {
      apply_setting(cfg, k, v, base);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  return cfg;
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override \"" + std::string(assignment) + "\" is not of the form key=value");
  apply_setting(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1), fs::current_path());
}

std::string format_manifest(const RunConfig& cfg) {
  std::string out = "# resolved run configuration\n";
  for (const auto& k : key_table()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace ggrnet::cli

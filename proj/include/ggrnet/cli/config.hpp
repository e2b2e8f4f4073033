#pragma once

#include "ggrnet/data/io.hpp"
#include "ggrnet/data/split.hpp"
#include "ggrnet/train/config.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ggrnet::cli {

/// Fully resolved settings of a train or ablate invocation.
struct RunConfig {
  std::filesystem::path data_path;
  std::string data_format = "auto";  // auto, xyz, tabular
  std::string schema;                // empty, "qm9", or a JSON schema path
  std::vector<std::string> elements = data::ElementVocabulary::standard().symbols();
  data::SplitSpec split;
  bool resplit = false;  // re-draw the split for each run, not only the init
  train::TrainConfig train;
  std::filesystem::path out = "runs/latest";
  std::size_t threads = 1;
  std::size_t runs = 1;

  data::DataSource data_source() const;
  /// Throws ConfigError.
  void validate() const;
};

/// Every recognized key, in manifest order.
const std::vector<std::string>& config_keys();

/// Applies one "key = value" setting. Relative paths resolve against base_dir.
/// Throws ConfigError on unknown keys and malformed values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir);

/// Parses "key = value" lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text,
                                                                  std::string_view context = {});

RunConfig load_run_config(const std::filesystem::path& path);

/// "key=value" command-line override, relative paths against the working directory.
void apply_override(RunConfig& cfg, std::string_view assignment);

/// Canonical form of every key; loading it reproduces `cfg` exactly.
std::string format_manifest(const RunConfig& cfg);

}  // namespace ggrnet::cli

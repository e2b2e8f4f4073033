#pragma once

#include "ggrnet/data/molecule.hpp"
#include "ggrnet/data/normalizer.hpp"
#include "ggrnet/model/config.hpp"
#include "ggrnet/model/params.hpp"

#include <filesystem>
#include <string>

namespace ggrnet::model {

/// Everything needed to predict with a trained model.
struct Checkpoint {
  ModelConfig config;
  data::ElementVocabulary vocab;
  std::string property;
  std::string unit;
  data::Normalizer normalizer;
  std::size_t epoch = 0;
  ModelParams params;

  /// Rows of the atom-count embedding table.
  std::size_t count_rows() const { return static_cast<std::size_t>(params.count_embeddings.rows()); }
};

/// Binary layout:
///   "GGRNCKPT", u32 version, u64 header length, JSON header,
///   tensors as little-endian doubles in row-major order,
///   u64 FNV-1a checksum of all preceding bytes.
/// Serialization is a pure function of the checkpoint contents.
std::string serialize_checkpoint(const Checkpoint& ckpt);

/// Throws ConfigError on a bad magic number, version, checksum, header or
/// tensor shape.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ggrnet::model

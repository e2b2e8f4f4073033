#pragma once

#include "ggrnet/data/split.hpp"
#include "ggrnet/train/trainer.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ggrnet::train {

enum class Ablation { none, no_count, no_distance, no_atom_embed };

/// "no_count", "no_distance", "no_atom_embed"; "all" is handled by the caller.
std::optional<Ablation> parse_ablation(std::string_view name);
std::string_view ablation_name(Ablation a);
/// Row label in the comparative table.
std::string ablation_label(Ablation a);
const std::vector<std::string_view>& ablation_names();

model::ModelConfig apply_ablation(model::ModelConfig cfg, Ablation a);

struct AblationRow {
  Ablation ablation = Ablation::none;
  std::string label;
  double val_mae = 0.0;   // best-validation checkpoint
  double test_mae = 0.0;  // best-validation checkpoint on the test split
  std::size_t best_epoch = 0;
};

struct AblationTable {
  std::string property;
  std::string unit;
  std::vector<AblationRow> rows;  // full model first
};

/// Trains the full model and each requested variant with the same seed and
/// data. Duplicates and `none` in `which` are ignored.
AblationTable run_ablation(const TrainConfig& base, const data::DatasetSplit& data, std::span<const Ablation> which,
                           const TrainOptions& options = {});

}  // namespace ggrnet::train

#include "ggrnet/train/ablation.hpp"

#include <algorithm>

namespace ggrnet::train {

std::optional<Ablation> parse_ablation(std::string_view name) {
  if (name == "no_count") return Ablation::no_count;
  if (name == "no_distance") return Ablation::no_distance;
  if (name == "no_atom_embed") return Ablation::no_atom_embed;
  return std::nullopt;
}

std::string_view ablation_name(Ablation a) {
  switch (a) {
    case Ablation::none: return "full";
    case Ablation::no_count: return "no_count";
    case Ablation::no_distance: return "no_distance";
    case Ablation::no_atom_embed: return "no_atom_embed";
  }
  return "full";
}

std::string ablation_label(Ablation a) {
  switch (a) {
    case Ablation::none: return "Full model (GGRNet)";
    case Ablation::no_count: return "Full model without x_N";
    case Ablation::no_distance: return "Full model without {d_vw}";
    case Ablation::no_atom_embed: return "Full model without {x_v}";
  }
  return {};
}

const std::vector<std::string_view>& ablation_names() {
  static const std::vector<std::string_view> names = {"no_count", "no_distance", "no_atom_embed"};
  return names;
}

model::ModelConfig apply_ablation(model::ModelConfig cfg, Ablation a) {
  switch (a) {
    case Ablation::none: break;
    case Ablation::no_count: cfg.use_count_feature = false; break;
    case Ablation::no_distance: cfg.use_distance_feature = false; break;
    case Ablation::no_atom_embed: cfg.use_atom_embedding = false; break;
  }
  return cfg;
}

AblationTable run_ablation(const TrainConfig& base, const data::DatasetSplit& data, std::span<const Ablation> which,
                           const TrainOptions& options) {
  std::vector<Ablation> variants = {Ablation::none};
  for (const Ablation a : which)
    if (std::find(variants.begin(), variants.end(), a) == variants.end()) variants.push_back(a);

  AblationTable table;
  table.property = base.target_property;
  table.unit = data.train.unit(base.target_property);
  for (const Ablation a : variants) {
    TrainConfig cfg = base;
    cfg.model = apply_ablation(base.model, a);
    const TrainResult res = train(data.train, data.val, cfg, options);
    AblationRow row;
    row.ablation = a;
    row.label = ablation_label(a);
    row.val_mae = res.best_val_mae;
    row.test_mae = evaluate(res.best_model, data.test, options.threads).mae;
    row.best_epoch = res.best_epoch;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace ggrnet::train

#pragma once

#include "ggrnet/data/molecule.hpp"
#include "ggrnet/data/normalizer.hpp"
#include "ggrnet/model/checkpoint.hpp"
#include "ggrnet/model/ggrnet.hpp"
#include "ggrnet/train/config.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ggrnet::train {

struct EpochReport {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_mse = 0.0;  // mean over the epoch's batches, normalized space
  double val_mae = 0.0;    // original units
  double seconds = 0.0;
  double max_grad_norm = 0.0;  // largest pre-clip norm seen in the epoch
};

struct StepStats {
  double loss = 0.0;
  double grad_norm = 0.0;          // before clipping
  double clipped_grad_norm = 0.0;  // norm of the gradient actually applied
};

/// One mini-batch update. Per-molecule gradients are summed in batch order and
/// then divided by the batch size, so the result is independent of `threads`.
/// Leaves the applied (averaged, clipped) gradient in params' grad buffers.
StepStats train_step(model::ModelParams& params, const model::ModelConfig& cfg,
                     std::span<const model::MoleculeInput* const> batch, std::span<const double> targets, double lr,
                     double clip_norm, std::size_t threads = 1);

struct TrainResult {
  model::Checkpoint final_model;
  model::Checkpoint best_model;  // lowest validation MAE, earliest on ties
  std::size_t best_epoch = 0;
  double best_val_mae = 0.0;
  std::vector<EpochReport> reports;
};

struct TrainOptions {
  std::size_t threads = 1;
  std::function<void(const EpochReport&)> on_epoch;
  /// Starting point instead of a fresh seeded initialization.
  std::optional<model::ModelParams> initial_params;
};

/// Seeded SGD on train_ds with per-epoch validation. The normalizer comes from
/// train_ds only and the count table has train_ds.max_atom_count() rows.
/// Throws NumericalError naming the epoch and batch on a non-finite value.
TrainResult train(const data::Dataset& train_ds, const data::Dataset& val_ds, const TrainConfig& cfg,
                  const TrainOptions& options = {});

struct Residual {
  std::string id;
  double target = 0.0;
  double prediction = 0.0;
};

struct EvalReport {
  std::string property;
  std::string unit;
  double mae = 0.0;                 // original units
  double normalized_mse = 0.0;      // loss space
  std::vector<Residual> residuals;  // dataset order
};

/// Predictions for every molecule, in original units, in dataset order.
/// Throws ConfigError when a dataset element is missing from the checkpoint
/// vocabulary.
std::vector<double> predict_all(const model::Checkpoint& model, const data::Dataset& ds, std::size_t threads = 1);

/// MAE of the checkpoint on ds for its target property. Pure.
EvalReport evaluate(const model::Checkpoint& model, const data::Dataset& ds, std::size_t threads = 1);

}  // namespace ggrnet::train

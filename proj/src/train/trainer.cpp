#include "ggrnet/train/trainer.hpp"

#include "ggrnet/autodiff/optim.hpp"
#include "ggrnet/errors.hpp"
#include "ggrnet/train/loss.hpp"
#include "ggrnet/util/parallel.hpp"
#include "ggrnet/util/random.hpp"

#include <chrono>
#include <numeric>

namespace ggrnet::train {

using model::ModelParams;
using model::MoleculeInput;

namespace {

/// Squared error of one molecule; adds its parameter gradient into `into`.
double molecule_gradient(const ModelParams& params, const model::ModelConfig& cfg, const MoleculeInput& input,
                         double target, ModelParams& into) {
  ad::Graph g;
  const model::BoundParams bound = model::bind(g, params, true);
  const ad::Variable y = model::forward(g, bound, input, cfg);
  const ad::Variable loss = mse_loss(g, std::span<const ad::Variable>(&y, 1), std::span<const double>(&target, 1));
  g.backward(loss);
  model::accumulate_gradients(bound, into);
  return loss.item();
}

std::vector<MoleculeInput> prepare_all(const data::Dataset& ds, const data::ElementVocabulary& vocab,
                                       std::size_t count_rows, const model::ModelConfig& cfg) {
  std::vector<MoleculeInput> out;
  out.reserve(ds.size());
  for (const auto& mol : ds.molecules()) out.push_back(model::prepare(mol, vocab, count_rows, cfg));
  return out;
}

std::vector<double> predict_inputs(const ModelParams& params, const model::ModelConfig& cfg,
                                   std::span<const MoleculeInput> inputs, const data::Normalizer& norm,
                                   std::size_t threads) {
  std::vector<double> out(inputs.size());
  parallel_for(inputs.size(), threads,
               [&](std::size_t i) { out[i] = norm.invert(model::predict(params, inputs[i], cfg)); });
  return out;
}

model::Checkpoint snapshot(const ModelParams& params, const TrainConfig& cfg, const data::Dataset& train_ds,
                           const data::Normalizer& norm, std::size_t epoch) {
  model::Checkpoint ck;
  ck.config = cfg.model;
  ck.vocab = train_ds.vocabulary();
  ck.property = cfg.target_property;
  ck.unit = train_ds.unit(cfg.target_property);
  ck.normalizer = norm;
  ck.epoch = epoch;
  ck.params = params;
  return ck;
}

void check_vocabulary(const model::Checkpoint& model, const data::Dataset& ds) {
  for (const auto& mol : ds.molecules())
    for (const auto& s : mol.symbols)
      if (!model.vocab.contains(s))
        throw ConfigError("molecule '" + mol.id + "' contains element \"" + s +
                          "\" which is not in the checkpoint vocabulary");
}

}  // namespace

StepStats train_step(ModelParams& params, const model::ModelConfig& cfg, std::span<const MoleculeInput* const> batch,
                     std::span<const double> targets, double lr, double clip_norm, std::size_t threads) {
  if (batch.size() != targets.size() || batch.empty())
    throw DimensionError("train_step: " + std::to_string(batch.size()) + " molecules for " +
                         std::to_string(targets.size()) + " targets");
  params.zero_grad();
  std::vector<double> losses(batch.size());
  if (threads <= 1 || batch.size() == 1) {
    for (std::size_t i = 0; i < batch.size(); ++i)
      losses[i] = molecule_gradient(params, cfg, *batch[i], targets[i], params);
  } else {
    // Per-slot buffers, then a fixed-order sum: the same additions in the same
    // order as the sequential branch.
    std::vector<ModelParams> slots(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t i) {
      slots[i] = model::zeros_like(params);
      losses[i] = molecule_gradient(params, cfg, *batch[i], targets[i], slots[i]);
    });
    const auto dst = params.tensors();
    for (auto& slot : slots) {
      const auto src = slot.tensors();
      for (std::size_t k = 0; k < ModelParams::tensor_count; ++k) dst[k]->grad += src[k]->grad;
    }
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  auto tensors = params.tensors();
  for (auto* t : tensors) t->grad *= inv_b;

  StepStats st;
  for (const double l : losses) st.loss += l;
  st.loss *= inv_b;
  const std::span<ad::Tensor<double>* const> view(tensors.data(), tensors.size());
  st.grad_norm = ad::clip_global_norm(view, clip_norm);
  st.clipped_grad_norm = ad::global_grad_norm(view);
  ad::sgd_step(view, lr);
  return st;
}

TrainResult train(const data::Dataset& train_ds, const data::Dataset& val_ds, const TrainConfig& cfg,
                  const TrainOptions& options) {
  cfg.validate();
  if (train_ds.size() < 2) throw DataError("training set needs at least 2 molecules");
  if (val_ds.empty()) throw DataError("validation set is empty");
  for (const auto* ds : {&train_ds, &val_ds})
    if (!ds->has_property(cfg.target_property))
      throw DataError("dataset has no property '" + cfg.target_property + "'");

  const auto norm = data::fit_normalizer(train_ds, cfg.target_property);
  const auto& vocab = train_ds.vocabulary();
  const std::size_t count_rows = train_ds.max_atom_count();
  const auto train_inputs = prepare_all(train_ds, vocab, count_rows, cfg.model);
  const auto val_inputs = prepare_all(val_ds, vocab, count_rows, cfg.model);
  const auto val_targets = val_ds.targets(cfg.target_property);
  std::vector<double> train_targets = train_ds.targets(cfg.target_property);
  for (double& t : train_targets) t = norm.normalize(t);

  ModelParams params = options.initial_params ? *options.initial_params
                                              : model::init_params(cfg.model, vocab.size(), count_rows, cfg.seed);

  Rng shuffle_rng(derive_seed(cfg.seed, seed_stream::shuffle));
  std::vector<std::size_t> order(train_ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.reports.reserve(cfg.epochs);
  std::vector<const MoleculeInput*> batch;
  std::vector<double> batch_targets;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    EpochReport rep;
    rep.epoch = epoch;
    rep.lr = lr_at_epoch(cfg.alpha0, cfg.decay_k, epoch);
    double loss_sum = 0.0;
    for (std::size_t begin = 0, b = 0; begin < order.size(); begin += cfg.batch_size, ++b) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      batch.clear();
      batch_targets.clear();
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(&train_inputs[order[i]]);
        batch_targets.push_back(train_targets[order[i]]);
      }
      try {
        const StepStats st = train_step(params, cfg.model, batch, batch_targets, rep.lr, cfg.clip_norm, options.threads);
        loss_sum += st.loss * static_cast<double>(batch.size());
        rep.max_grad_norm = std::max(rep.max_grad_norm, st.grad_norm);
      } catch (const NumericalError& e) {
        throw NumericalError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) + ": " + e.what());
      }
    }
    rep.train_mse = loss_sum / static_cast<double>(order.size());
    try {
      rep.val_mae = mae(predict_inputs(params, cfg.model, val_inputs, norm, options.threads), val_targets);
    } catch (const NumericalError& e) {
      throw NumericalError("epoch " + std::to_string(epoch) + ", validation: " + e.what());
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (epoch == 0 || rep.val_mae < result.best_val_mae) {
      result.best_val_mae = rep.val_mae;
      result.best_epoch = epoch;
      result.best_model = snapshot(params, cfg, train_ds, norm, epoch);
    }
    result.reports.push_back(rep);
    if (options.on_epoch) options.on_epoch(rep);
  }
  result.final_model = snapshot(params, cfg, train_ds, norm, cfg.epochs - 1);
  return result;
}

std::vector<double> predict_all(const model::Checkpoint& model, const data::Dataset& ds, std::size_t threads) {
  model.config.validate();
  check_vocabulary(model, ds);
  const auto inputs = prepare_all(ds, model.vocab, model.count_rows(), model.config);
  return predict_inputs(model.params, model.config, inputs, model.normalizer, threads);
}

EvalReport evaluate(const model::Checkpoint& model, const data::Dataset& ds, std::size_t threads) {
  if (ds.empty()) throw DataError("evaluation dataset is empty");
  if (!ds.has_property(model.property))
    throw DataError("dataset has no property '" + model.property + "' required by the checkpoint");
  const auto predictions = predict_all(model, ds, threads);
  const auto targets = ds.targets(model.property);
  EvalReport rep;
  rep.property = model.property;
  rep.unit = model.unit;
  rep.mae = mae(predictions, targets);
  std::vector<double> zp(predictions.size()), zt(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    zp[i] = model.normalizer.normalize(predictions[i]);
    zt[i] = model.normalizer.normalize(targets[i]);
    rep.residuals.push_back({ds[i].id, targets[i], predictions[i]});
  }
  rep.normalized_mse = mse(zp, zt);
  return rep;
}

}  // namespace ggrnet::train

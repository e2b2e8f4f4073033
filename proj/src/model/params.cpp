#include "ggrnet/model/params.hpp"

#include "ggrnet/errors.hpp"
#include "ggrnet/util/random.hpp"

#include <cmath>

namespace ggrnet::model {

void ModelConfig::validate() const {
  if (d_atom == 0 || d_count == 0 || d_h == 0) throw ConfigError("model dimensions must be at least 1");
  if (steps == 0) throw ConfigError("model.T must be at least 1");
  if (!(epsilon_distance > 0.0)) throw ConfigError("model.epsilon_distance must be positive");
}

std::array<Tensor*, ModelParams::tensor_count> ModelParams::tensors() {
  return {&atom_embeddings, &count_embeddings, &w_p,    &b_p,    &w_q,    &b_q,
          &mlp_w1,          &mlp_b1,           &mlp_w2, &mlp_b2, &mlp_w3, &mlp_b3};
}

std::array<const Tensor*, ModelParams::tensor_count> ModelParams::tensors() const {
  return {&atom_embeddings, &count_embeddings, &w_p,    &b_p,    &w_q,    &b_q,
          &mlp_w1,          &mlp_b1,           &mlp_w2, &mlp_b2, &mlp_w3, &mlp_b3};
}

const std::array<std::string_view, ModelParams::tensor_count>& ModelParams::names() {
  static const std::array<std::string_view, tensor_count> n = {
      "atom_embeddings", "count_embeddings", "w_p",    "b_p",    "w_q",    "b_q",
      "mlp_w1",          "mlp_b1",           "mlp_w2", "mlp_b2", "mlp_w3", "mlp_b3"};
  return n;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += static_cast<std::size_t>(t->size());
  return n;
}

void ModelParams::zero_grad() {
  for (auto* t : tensors()) t->zero_grad();
}

bool ModelParams::same_values(const ModelParams& other) const {
  const auto a = tensors();
  const auto b = other.tensors();
  for (std::size_t i = 0; i < tensor_count; ++i)
    if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols() || a[i]->value != b[i]->value) return false;
  return true;
}

namespace {

Tensor glorot(Rng& rng, std::size_t rows, std::size_t cols) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(static_cast<ad::Index>(rows), static_cast<ad::Index>(cols));
  for (ad::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return Tensor(std::move(m), true);
}

Tensor zero_bias(std::size_t rows) { return Tensor(Mat::Zero(static_cast<ad::Index>(rows), 1), true); }

}  // namespace

ModelParams init_params(const ModelConfig& cfg, std::size_t vocab_size, std::size_t count_rows, std::uint64_t seed) {
  cfg.validate();
  if (vocab_size == 0 || count_rows == 0) throw ConfigError("vocabulary and count table sizes must be positive");
  Rng rng(derive_seed(seed, seed_stream::init));
  const std::size_t d_in = cfg.input_width();
  const std::size_t d_mlp = cfg.mlp_width();
  ModelParams p;
  p.atom_embeddings = glorot(rng, vocab_size, cfg.d_atom);
  p.count_embeddings = glorot(rng, count_rows, cfg.d_count);
  p.w_p = glorot(rng, cfg.d_h, d_in);
  p.b_p = zero_bias(cfg.d_h);
  p.w_q = glorot(rng, cfg.d_h, d_in);
  p.b_q = zero_bias(cfg.d_h);
  p.mlp_w1 = glorot(rng, d_mlp, cfg.d_h);
  p.mlp_b1 = zero_bias(d_mlp);
  p.mlp_w2 = glorot(rng, d_mlp, d_mlp);
  p.mlp_b2 = zero_bias(d_mlp);
  p.mlp_w3 = glorot(rng, 1, d_mlp);
  p.mlp_b3 = zero_bias(1);
  return p;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams out;
  const auto src = params.tensors();
  const auto dst = out.tensors();
  for (std::size_t i = 0; i < ModelParams::tensor_count; ++i)
    *dst[i] = Tensor(Mat::Zero(src[i]->rows(), src[i]->cols()), true);
  return out;
}

}  // namespace ggrnet::model

#include "ggrnet/model/ggrnet.hpp"

#include "ggrnet/autodiff/ops.hpp"
#include "ggrnet/data/geometry.hpp"
#include "ggrnet/errors.hpp"

#include <algorithm>

namespace ggrnet::model {

using ad::Index;

MoleculeInput prepare(const data::Molecule& mol, const data::ElementVocabulary& vocab, std::size_t count_rows,
                      const ModelConfig& cfg) {
  if (mol.size() == 0) throw DataError("molecule '" + mol.id + "' has no atoms");
  if (mol.coords.size() != mol.size()) throw DataError("molecule '" + mol.id + "' has mismatched coordinates");
  if (count_rows == 0) throw ConfigError("count embedding table is empty");
  MoleculeInput in;
  in.atoms = mol.size();
  in.elements.reserve(in.atoms);
  for (const auto& s : mol.symbols) in.elements.push_back(static_cast<Index>(vocab.index_of(s)));
  in.count_row = static_cast<Index>(std::min(in.atoms, count_rows) - 1);
  in.inverse_distances = data::inverse_distance_matrix(mol.coords, cfg.epsilon_distance);

  const std::size_t pairs = in.atoms * (in.atoms - 1);
  in.receivers.reserve(pairs);
  in.senders.reserve(pairs);
  in.pair_inverse_distances.resize(static_cast<Index>(pairs), 1);
  Index k = 0;
  for (Index v = 0; v < static_cast<Index>(in.atoms); ++v)
    for (Index w = 0; w < static_cast<Index>(in.atoms); ++w) {
      if (v == w) continue;
      in.receivers.push_back(v);
      in.senders.push_back(w);
      in.pair_inverse_distances(k++, 0) = in.inverse_distances(v, w);
    }
  return in;
}

std::array<const Variable*, ModelParams::tensor_count> BoundParams::vars() const {
  return {&atom_embeddings, &count_embeddings, &w_p,    &b_p,    &w_q,    &b_q,
          &mlp_w1,          &mlp_b1,           &mlp_w2, &mlp_b2, &mlp_w3, &mlp_b3};
}

BoundParams bind(Graph& g, const ModelParams& params, bool trainable) {
  const auto t = params.tensors();
  std::array<Variable, ModelParams::tensor_count> v;
  for (std::size_t i = 0; i < ModelParams::tensor_count; ++i)
    v[i] = trainable ? g.variable(t[i]->value) : g.constant(t[i]->value);
  return BoundParams{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11]};
}

void accumulate_gradients(const BoundParams& bound, ModelParams& into) {
  const auto vars = bound.vars();
  const auto dst = into.tensors();
  for (std::size_t i = 0; i < ModelParams::tensor_count; ++i) {
    if (!vars[i]->requires_grad() || !dst[i]->requires_grad) continue;
    if (dst[i]->grad.rows() != vars[i]->rows() || dst[i]->grad.cols() != vars[i]->cols())
      throw DimensionError("accumulate_gradients: shape mismatch for " + std::string(ModelParams::names()[i]));
    dst[i]->grad += vars[i]->grad();
  }
}

Variable message(const Variable& xv, const Variable& hv, const Variable& xw, const Variable& hw,
                 const Variable& xN, const Variable& dvw, const BoundParams& params) {
  const Variable in = ad::concat({xv, hv, xw, hw, xN, dvw});
  const Variable gate = ad::sigmoid(ad::linear(params.w_p, params.b_p, in));
  const Variable value = ad::tanh(ad::linear(params.w_q, params.b_q, in));
  return ad::hadamard(gate, value);
}

MessagePassing::MessagePassing(Graph& g, const BoundParams& params, const MoleculeInput& input,
                               const ModelConfig& cfg)
    : graph_(&g), input_(&input), cfg_(cfg) {
  const auto n = static_cast<Index>(input.atoms);
  const auto d_a = static_cast<Index>(cfg.d_atom);
  const auto d_c = static_cast<Index>(cfg.d_count);
  if (params.w_p.cols() != static_cast<Index>(cfg.input_width()) || params.w_p.rows() != static_cast<Index>(cfg.d_h))
    throw DimensionError("message weights are " + params.w_p.shape() + " for configured input width " +
                         std::to_string(cfg.input_width()));
  atom_inputs_ = cfg.use_atom_embedding ? ad::gather_rows(params.atom_embeddings, input.elements)
                                        : g.constant(Mat::Zero(n, d_a));
  count_input_ = cfg.use_count_feature ? ad::gather_rows(params.count_embeddings, {input.count_row})
                                       : g.constant(Mat::Zero(1, d_c));
  distances_ = cfg.use_distance_feature
                   ? g.constant(input.pair_inverse_distances)
                   : g.constant(Mat::Zero(static_cast<Index>(input.pair_count()), 1));
  gate_ = make_branch(params.w_p, params.b_p);
  value_ = make_branch(params.w_q, params.b_q);
}

MessagePassing::Branch MessagePassing::make_branch(const Variable& w, const Variable& b) const {
  const auto d_a = static_cast<Index>(cfg_.d_atom);
  const auto d_h = static_cast<Index>(cfg_.d_h);
  const auto d_c = static_cast<Index>(cfg_.d_count);
  Branch br;
  const Variable w_x_recv = ad::slice_cols(w, 0, d_a);
  br.w_h_recv = ad::slice_cols(w, d_a, d_h);
  const Variable w_x_send = ad::slice_cols(w, d_a + d_h, d_a);
  br.w_h_send = ad::slice_cols(w, 2 * d_a + d_h, d_h);
  const Variable w_count = ad::slice_cols(w, 2 * d_a + 2 * d_h, d_c);
  const Variable w_dist = ad::slice_cols(w, 2 * d_a + 2 * d_h + d_c, 1);

  const Variable per_pair = ad::gather_rows(ad::matmul_nt(atom_inputs_, w_x_recv), input_->receivers) +
                            ad::gather_rows(ad::matmul_nt(atom_inputs_, w_x_send), input_->senders) +
                            ad::matmul_nt(distances_, w_dist);
  const Variable shared = ad::matmul_nt(count_input_, w_count) + ad::transpose(b);
  br.fixed = ad::add_row_broadcast(per_pair, shared);
  return br;
}

Variable MessagePassing::preactivation(const Branch& br, const Variable& state) const {
  return br.fixed + ad::gather_rows(ad::matmul_nt(state, br.w_h_recv), input_->receivers) +
         ad::gather_rows(ad::matmul_nt(state, br.w_h_send), input_->senders);
}

Variable MessagePassing::initial_state() const {
  return graph_->constant(Mat::Zero(static_cast<Index>(input_->atoms), static_cast<Index>(cfg_.d_h)));
}

Variable MessagePassing::step(const Variable& state) const {
  const Variable m = ad::hadamard(ad::sigmoid(preactivation(gate_, state)), ad::tanh(preactivation(value_, state)));
  const auto n = static_cast<Index>(input_->atoms);
  return ad::scatter_add_rows(m, input_->receivers, n) * (1.0 / static_cast<double>(n));
}

Variable readout(const Variable& state, const BoundParams& params) {
  const Variable pooled = ad::transpose(ad::mean_rows(state));
  const Variable a1 = ad::relu(ad::linear(params.mlp_w1, params.mlp_b1, pooled));
  const Variable a2 = ad::relu(ad::linear(params.mlp_w2, params.mlp_b2, a1));
  return ad::linear(params.mlp_w3, params.mlp_b3, a2);
}

Variable forward(Graph& g, const BoundParams& params, const MoleculeInput& input, const ModelConfig& cfg,
                 ForwardTrace* trace) {
  const MessagePassing mp(g, params, input, cfg);
  Variable h = mp.initial_state();
  if (trace) {
    trace->atom_inputs = mp.atom_inputs().value();
    trace->count_input = mp.count_input().value();
    trace->states.assign(1, h.value());
  }
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    h = mp.step(h);
    if (trace) trace->states.push_back(h.value());
  }
  if (trace) trace->pooled = h.value().colwise().mean();
  return readout(h, params);
}

double predict(const ModelParams& params, const MoleculeInput& input, const ModelConfig& cfg) {
  Graph g;
  const BoundParams bound = bind(g, params, false);
  return forward(g, bound, input, cfg).item();
}

}  // namespace ggrnet::model

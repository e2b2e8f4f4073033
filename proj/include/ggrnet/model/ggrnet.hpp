#pragma once

#include "ggrnet/autodiff/graph.hpp"
#include "ggrnet/data/molecule.hpp"
#include "ggrnet/model/config.hpp"
#include "ggrnet/model/params.hpp"

#include <vector>

namespace ggrnet::model {

using ad::Graph;
using ad::Variable;

/// Per-molecule quantities that do not depend on parameters, computed once.
struct MoleculeInput {
  std::size_t atoms = 0;
  std::vector<ad::Index> elements;   // embedding row of each atom
  ad::Index count_row = 0;           // min(N, count_rows) - 1
  std::vector<ad::Index> receivers;  // v of each ordered pair (v, w), v != w
  std::vector<ad::Index> senders;    // w of each ordered pair
  Eigen::MatrixXd inverse_distances; // N x N, zero diagonal
  Mat pair_inverse_distances;        // P x 1 in pair order

  std::size_t pair_count() const { return receivers.size(); }
};

/// Pairs are ordered receiver-major with ascending sender, so every message
/// sum runs over w in ascending atom index. Throws VocabularyError for symbols
/// outside `vocab`. Molecules larger than the count table use its last row.
MoleculeInput prepare(const data::Molecule& mol, const data::ElementVocabulary& vocab, std::size_t count_rows,
                      const ModelConfig& cfg);

/// Parameters placed on a graph, as trainable variables or as constants.
struct BoundParams {
  Variable atom_embeddings, count_embeddings;
  Variable w_p, b_p, w_q, b_q;
  Variable mlp_w1, mlp_b1, mlp_w2, mlp_b2, mlp_w3, mlp_b3;

  std::array<const Variable*, ModelParams::tensor_count> vars() const;
};

BoundParams bind(Graph& g, const ModelParams& params, bool trainable);

/// Adds each bound variable's gradient into the matching tensor of `into`.
void accumulate_gradients(const BoundParams& bound, ModelParams& into);

/// One directed message m_vw = sigmoid(p) * tanh(q), where p and q are affine
/// maps of [x_v, h_v, x_w, h_w, x_N, d_vw]. All inputs are column vectors.
Variable message(const Variable& xv, const Variable& hv, const Variable& xw, const Variable& hw,
                 const Variable& xN, const Variable& dvw, const BoundParams& params);

/// Batched message passing over all ordered pairs of one molecule.
///
/// The weight matrices are split into their receiver, sender, count and
/// distance column blocks, so that the parameter-independent part of every
/// pre-activation (x_v, x_w, x_N and d_vw terms) is formed once and reused by
/// each step. Ablated features enter as zeros of unchanged width.
class MessagePassing {
 public:
  MessagePassing(Graph& g, const BoundParams& params, const MoleculeInput& input, const ModelConfig& cfg);

  /// h^0 = 0, N x d_h.
  Variable initial_state() const;

  /// h^{t+1}_v = (1/N) sum_{w != v} m_vw, with the sum in ascending w.
  Variable step(const Variable& state) const;

  /// N x d_atom rows fed to every step (zeros when atom embeddings are off).
  const Variable& atom_inputs() const { return atom_inputs_; }
  /// 1 x d_count (zeros when the count feature is off).
  const Variable& count_input() const { return count_input_; }
  /// P x 1 (zeros when the distance feature is off).
  const Variable& distance_inputs() const { return distances_; }

 private:
  struct Branch {
    Variable w_h_recv, w_h_send;  // hidden-state column blocks
    Variable fixed;               // P x d_h, every state-independent term including the bias
  };
  Branch make_branch(const Variable& w, const Variable& b) const;
  Variable preactivation(const Branch& br, const Variable& state) const;

  Graph* graph_;
  const MoleculeInput* input_;
  ModelConfig cfg_;
  Variable atom_inputs_, count_input_, distances_;
  Branch gate_, value_;
};

/// MLP(mean_v h_v): affine, ReLU, affine, ReLU, affine to a 1 x 1 output.
Variable readout(const Variable& state, const BoundParams& params);

/// Optional capture of intermediate values for inspection and tests.
struct ForwardTrace {
  Mat atom_inputs;
  Mat count_input;
  std::vector<Mat> states;  // h^0 .. h^T
  Mat pooled;               // 1 x d_h mean of h^T
};

/// Full prediction in normalized target space, 1 x 1.
Variable forward(Graph& g, const BoundParams& params, const MoleculeInput& input, const ModelConfig& cfg,
                 ForwardTrace* trace = nullptr);

/// Gradient-free convenience wrapper around forward().
double predict(const ModelParams& params, const MoleculeInput& input, const ModelConfig& cfg);

}  // namespace ggrnet::model

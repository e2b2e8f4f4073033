#pragma once

// Straight-line evaluation of the model equations with explicit loops over
// atoms and ordered pairs. Shares no code with the library beyond the
// parameter container, so it can serve as an oracle for the batched forward.

#include "ggrnet/data/molecule.hpp"
#include "ggrnet/model/config.hpp"
#include "ggrnet/model/params.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline VectorXd column(const ggrnet::model::Tensor& t) {
  VectorXd v(t.value.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = t.value.data()[i];
  return v;
}

inline MatrixXd dense(const ggrnet::model::Tensor& t) { return MatrixXd(t.value); }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Result {
  std::vector<MatrixXd> states;  // h^0 .. h^T, N x d_h
  double y = 0.0;
};

inline double mlp(const ggrnet::model::ModelParams& p, const VectorXd& pooled) {
  VectorXd a1 = dense(p.mlp_w1) * pooled + column(p.mlp_b1);
  for (Eigen::Index i = 0; i < a1.size(); ++i) a1(i) = std::max(0.0, a1(i));
  VectorXd a2 = dense(p.mlp_w2) * a1 + column(p.mlp_b2);
  for (Eigen::Index i = 0; i < a2.size(); ++i) a2(i) = std::max(0.0, a2(i));
  return (dense(p.mlp_w3) * a2)(0) + p.mlp_b3.value(0, 0);
}

inline Result evaluate(const ggrnet::data::Molecule& mol, const ggrnet::data::ElementVocabulary& vocab,
                       const ggrnet::model::ModelParams& p, const ggrnet::model::ModelConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(mol.size());
  const auto da = static_cast<Eigen::Index>(cfg.d_atom);
  const auto dh = static_cast<Eigen::Index>(cfg.d_h);
  const auto dc = static_cast<Eigen::Index>(cfg.d_count);
  const MatrixXd wp = dense(p.w_p), wq = dense(p.w_q);
  const VectorXd bp = column(p.b_p), bq = column(p.b_q);

  std::vector<VectorXd> x(mol.size());
  for (Eigen::Index v = 0; v < n; ++v) {
    const auto row = static_cast<Eigen::Index>(vocab.index_of(mol.symbols[v]));
    x[v] = cfg.use_atom_embedding ? VectorXd(p.atom_embeddings.value.row(row).transpose()) : VectorXd::Zero(da);
  }
  const Eigen::Index count_rows = p.count_embeddings.rows();
  const Eigen::Index count_row = std::min<Eigen::Index>(n, count_rows) - 1;
  const VectorXd xN =
      cfg.use_count_feature ? VectorXd(p.count_embeddings.value.row(count_row).transpose()) : VectorXd::Zero(dc);

  Result r;
  r.states.push_back(MatrixXd::Zero(n, dh));
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const MatrixXd& h = r.states.back();
    MatrixXd next = MatrixXd::Zero(n, dh);
    for (Eigen::Index v = 0; v < n; ++v) {
      VectorXd m = VectorXd::Zero(dh);
      for (Eigen::Index w = 0; w < n; ++w) {
        if (w == v) continue;
        const double dx = mol.coords[v].x() - mol.coords[w].x();
        const double dy = mol.coords[v].y() - mol.coords[w].y();
        const double dz = mol.coords[v].z() - mol.coords[w].z();
        const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
        const double d = cfg.use_distance_feature ? 1.0 / std::max(dist, cfg.epsilon_distance) : 0.0;
        VectorXd in(cfg.input_width());
        in << x[v], h.row(v).transpose(), x[w], h.row(w).transpose(), xN, d;
        const VectorXd pv = wp * in + bp;
        const VectorXd qv = wq * in + bq;
        for (Eigen::Index k = 0; k < dh; ++k) m(k) += sigmoid(pv(k)) * std::tanh(qv(k));
      }
      next.row(v) = (m / static_cast<double>(n)).transpose();
    }
    r.states.push_back(next);
  }
  const VectorXd pooled = r.states.back().colwise().mean().transpose();
  r.y = mlp(p, pooled);
  return r;
}

}  // namespace oracle

#include "ggrnet/train/gradcheck.hpp"

#include "ggrnet/errors.hpp"
#include "ggrnet/model/ggrnet.hpp"
#include "ggrnet/util/random.hpp"

#include <algorithm>
#include <cmath>

namespace ggrnet::train {

namespace {

constexpr double exact_floor = 1e-10;

data::Molecule random_molecule(Rng& rng, std::size_t atoms, const data::ElementVocabulary& vocab) {
  data::Molecule mol;
  mol.id = "gradcheck" + std::to_string(atoms);
  while (mol.coords.size() < atoms) {
    const data::Vec3 p(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    bool clear = true;
    for (const auto& q : mol.coords) clear = clear && (p - q).norm() > 0.5;
    if (!clear) continue;
    mol.coords.push_back(p);
    mol.symbols.push_back(vocab.symbols()[static_cast<std::size_t>(rng.below(vocab.size()))]);
  }
  return mol;
}

}  // namespace

GradcheckResult run_gradcheck(const GradcheckOptions& o) {
  if (o.atom_counts.empty()) throw ConfigError("gradcheck needs at least one atom count");
  if (!(o.step > 0.0)) throw ConfigError("gradcheck step must be positive");
  model::ModelConfig cfg;
  cfg.d_atom = o.d_atom;
  cfg.d_count = o.d_count;
  cfg.d_h = o.d_h;
  cfg.steps = o.steps;
  cfg.validate();
  const data::ElementVocabulary vocab({"H", "C", "N", "O"});
  const std::size_t count_rows = *std::max_element(o.atom_counts.begin(), o.atom_counts.end());
  if (count_rows == 0) throw ConfigError("gradcheck atom counts must be positive");

  GradcheckResult result;
  result.passed = true;
  for (const std::size_t atoms : o.atom_counts) {
    Rng rng(derive_seed(o.seed, 1000 + atoms));
    const auto mol = random_molecule(rng, atoms, vocab);
    const auto input = model::prepare(mol, vocab, count_rows, cfg);
    model::ModelParams params = model::init_params(cfg, vocab.size(), count_rows, rng.below(~std::uint64_t{0}));
    for (auto* b : {&params.b_p, &params.b_q, &params.mlp_b1, &params.mlp_b2, &params.mlp_b3})
      for (ad::Index i = 0; i < b->value.size(); ++i) b->value.data()[i] = rng.uniform(-0.2, 0.2);

    ad::Graph g;
    const auto bound = model::bind(g, params, true);
    g.backward(model::forward(g, bound, input, cfg));
    const auto vars = bound.vars();

    const auto tensors = params.tensors();
    for (std::size_t k = 0; k < model::ModelParams::tensor_count; ++k) {
      const model::Mat analytic = vars[k]->grad();
      model::Mat numeric(analytic.rows(), analytic.cols());
      double* x = tensors[k]->value.data();
      for (ad::Index i = 0; i < numeric.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + o.step;
        const double up = model::predict(params, input, cfg);
        x[i] = saved - o.step;
        const double down = model::predict(params, input, cfg);
        x[i] = saved;
        numeric.data()[i] = (up - down) / (2.0 * o.step);
      }
      TensorCheck c;
      c.name = std::string(model::ModelParams::names()[k]);
      c.atoms = atoms;
      c.analytic_norm = analytic.norm();
      c.numeric_norm = numeric.norm();
      const double scale = std::max(c.analytic_norm, c.numeric_norm);
      c.rel_error = scale < exact_floor ? 0.0 : (analytic - numeric).norm() / scale;
      if (result.checks.empty() || c.rel_error > result.worst.rel_error) result.worst = c;
      if (!(c.rel_error < o.tolerance)) result.passed = false;
      result.checks.push_back(std::move(c));
    }
  }
  return result;
}

}  // namespace ggrnet::train

#include "ggrnet/cli/app.hpp"

#include "ggrnet/autodiff/graph.hpp"
#include "ggrnet/cli/config.hpp"
#include "ggrnet/data/synthetic.hpp"
#include "ggrnet/errors.hpp"
#include "ggrnet/model/checkpoint.hpp"
#include "ggrnet/train/ablation.hpp"
#include "ggrnet/train/gradcheck.hpp"
#include "ggrnet/train/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

namespace ggrnet::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

/// Flags shared by train and ablate.
struct RunFlags {
  std::string config;
  std::vector<std::string> set;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> epochs;
  bool verbose = false;
};

void add_run_flags(CLI::App& cmd, RunFlags& f) {
  cmd.add_option("--config", f.config, "Run configuration file (flat dotted keys)")->required();
  cmd.add_option("--set", f.set, "Override a configuration key, key=value (repeatable)");
  cmd.add_option("--seed", f.seed, "Seed for initialization, shuffling and the split");
  cmd.add_option("--threads", f.threads, "Worker threads (1 guarantees bit-reproducibility)");
  cmd.add_option("--out", f.out, "Output directory");
  cmd.add_option("--runs", f.runs, "Independent runs with consecutive seeds");
  cmd.add_option("--epochs", f.epochs, "Override train.epochs");
  cmd.add_flag("-v,--verbose", f.verbose, "Per-epoch progress on standard error");
}

RunConfig resolve(const RunFlags& f) {
  RunConfig cfg = load_run_config(f.config);
  for (const auto& s : f.set) apply_override(cfg, s);
  if (f.seed) {
    cfg.train.seed = *f.seed;
    cfg.split.seed = *f.seed;
  }
  if (f.threads) cfg.threads = *f.threads;
  if (f.out) cfg.out = fs::absolute(*f.out).lexically_normal();
  if (f.runs) cfg.runs = *f.runs;
  if (f.epochs) cfg.train.epochs = *f.epochs;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation; 0 for a single run.
double spread_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

data::Dataset load_checked(const RunConfig& cfg) {
  auto ds = data::load_dataset(cfg.data_source());
  if (!ds.has_property(cfg.train.target_property))
    throw DataError("dataset " + cfg.data_path.string() + " has no property \"" + cfg.train.target_property + "\"");
  return ds;
}

/// Seeds of run k: initialization/shuffling always advance, the split only on request.
RunConfig run_variant(const RunConfig& cfg, std::size_t k) {
  RunConfig r = cfg;
  r.train.seed = cfg.train.seed + k;
  if (cfg.resplit) r.split.seed = cfg.split.seed + k;
  r.runs = 1;
  if (cfg.runs > 1) r.out = cfg.out / fmt::format("run_{}", k);
  return r;
}

int cmd_train(const RunFlags& flags, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve(flags);
  const data::Dataset ds = load_checked(cfg);
  fs::create_directories(cfg.out);
  write_text(cfg.out / "manifest.cfg", format_manifest(cfg));

  json report = {{"property", cfg.train.target_property}, {"unit", ds.unit(cfg.train.target_property)}};
  json runs = json::array();
  std::vector<double> best_mae, final_mae;
  for (std::size_t k = 0; k < cfg.runs; ++k) {
    const RunConfig rc = run_variant(cfg, k);
    fs::create_directories(rc.out);
    if (cfg.runs > 1) write_text(rc.out / "manifest.cfg", format_manifest(rc));
    const auto parts = data::split(ds, rc.split);
    write_text(rc.out / "test.csv", data::format_tabular(parts.test));

    std::ofstream metrics(rc.out / "metrics.jsonl", std::ios::binary | std::ios::trunc);
    if (!metrics) throw ConfigError("cannot write " + (rc.out / "metrics.jsonl").string());
    train::TrainOptions opts;
    opts.threads = rc.threads;
    opts.on_epoch = [&](const train::EpochReport& r) {
      const json line = {{"epoch", r.epoch},
                         {"lr", r.lr},
                         {"train_mse", r.train_mse},
                         {"val_mae", r.val_mae},
                         {"seconds", r.seconds}};
      metrics << line.dump() << '\n';
      metrics.flush();
      if (flags.verbose)
        fmt::print(err, "run {} epoch {} lr {:.6g} train_mse {:.6g} val_mae {:.6g}\n", k, r.epoch, r.lr, r.train_mse,
                   r.val_mae);
    };
    const auto res = train::train(parts.train, parts.val, rc.train, opts);
    model::save_checkpoint(rc.out / "final.ckpt", res.final_model);
    model::save_checkpoint(rc.out / "best.ckpt", res.best_model);
    const auto best_eval = train::evaluate(res.best_model, parts.test, rc.threads);
    const auto final_eval = train::evaluate(res.final_model, parts.test, rc.threads);
    best_mae.push_back(best_eval.mae);
    final_mae.push_back(final_eval.mae);
    runs.push_back({{"run", k},
                    {"seed", rc.train.seed},
                    {"split_seed", rc.split.seed},
                    {"sizes", {parts.train.size(), parts.val.size(), parts.test.size()}},
                    {"best_epoch", res.best_epoch},
                    {"best_val_mae", res.best_val_mae},
                    {"test_mae", best_eval.mae},
                    {"test_mae_final", final_eval.mae},
                    {"dir", rc.out.generic_string()}});
  }
  report["runs"] = runs;
  report["test_mae_mean"] = mean_of(best_mae);
  report["test_mae_spread"] = spread_of(best_mae);
  report["test_mae_final_mean"] = mean_of(final_mae);
  report["test_mae_final_spread"] = spread_of(final_mae);
  write_text(cfg.out / "report.json", report.dump(2) + "\n");
  out << report.dump(2) << '\n';
  return exit_ok;
}

int cmd_ablate(const RunFlags& flags, const std::string& which, bool table, std::ostream& out, std::ostream& err) {
  std::vector<train::Ablation> variants;
  if (which == "all") {
    variants = {train::Ablation::no_count, train::Ablation::no_distance, train::Ablation::no_atom_embed};
  } else if (const auto a = train::parse_ablation(which)) {
    variants = {*a};
  } else {
    std::string valid;
    for (const auto n : train::ablation_names()) valid += std::string(n) + ", ";
    throw ConfigError("unknown ablation \"" + which + "\"; valid names: " + valid + "all");
  }
  const RunConfig cfg = resolve(flags);
  const data::Dataset ds = load_checked(cfg);
  const auto parts = data::split(ds, cfg.split);
  train::TrainOptions opts;
  opts.threads = cfg.threads;
  if (flags.verbose)
    opts.on_epoch = [&](const train::EpochReport& r) {
      fmt::print(err, "epoch {} train_mse {:.6g} val_mae {:.6g}\n", r.epoch, r.train_mse, r.val_mae);
    };
  const auto result = train::run_ablation(cfg.train, parts, variants, opts);

  json rows = json::array();
  for (const auto& r : result.rows)
    rows.push_back({{"label", r.label},
                    {"ablation", train::ablation_name(r.ablation)},
                    {"val_mae", r.val_mae},
                    {"test_mae", r.test_mae},
                    {"best_epoch", r.best_epoch}});
  const json doc = {{"property", result.property}, {"unit", result.unit}, {"rows", rows}};
  if (flags.out) {
    fs::create_directories(cfg.out);
    write_text(cfg.out / "manifest.cfg", format_manifest(cfg));
    write_text(cfg.out / "ablation.json", doc.dump(2) + "\n");
  }
  if (table) {
    fmt::print(out, "| {:<28} | {:>14} | {:>14} |\n", "Model", "val MAE", "test MAE");
    fmt::print(out, "|{:-<30}|{:->16}|{:->16}|\n", "", "", "");
    for (const auto& r : result.rows) fmt::print(out, "| {:<28} | {:>14.6g} | {:>14.6g} |\n", r.label, r.val_mae, r.test_mae);
  } else {
    out << doc.dump(2) << '\n';
  }
  return exit_ok;
}

struct DataFlags {
  std::string path;
  std::string format = "auto";
  std::string schema;
  std::string elements;
  std::size_t threads = 1;
};

void add_data_flags(CLI::App& cmd, DataFlags& f, const std::string& name, const std::string& help) {
  cmd.add_option(name, f.path, help);
  cmd.add_option("--format", f.format, "auto, xyz or tabular")->check(CLI::IsMember({"auto", "xyz", "tabular"}));
  cmd.add_option("--schema", f.schema, "Property schema: qm9 or a JSON schema file (XYZ input)");
  cmd.add_option("--threads", f.threads, "Worker threads")->check(CLI::PositiveNumber);
}

data::DataSource source_from(const DataFlags& f, const data::ElementVocabulary& vocab) {
  RunConfig tmp;
  tmp.data_path = f.path;
  apply_setting(tmp, "data.format", f.format, fs::current_path());
  if (!f.schema.empty()) apply_setting(tmp, "data.schema", f.schema, fs::current_path());
  tmp.elements = vocab.symbols();
  tmp.threads = f.threads;
  return tmp.data_source();
}

int cmd_eval(const std::string& checkpoint, const DataFlags& df, const std::string& config, const std::string& part,
             bool residuals, std::ostream& out) {
  const auto ck = model::load_checkpoint(checkpoint);
  data::Dataset ds;
  if (!config.empty()) {
    const RunConfig cfg = load_run_config(config);
    auto full = data::load_dataset(cfg.data_source());
    if (part == "all") {
      ds = std::move(full);
    } else {
      auto parts = data::split(full, cfg.split);
      ds = part == "train" ? parts.train : part == "val" ? parts.val : parts.test;
    }
  } else {
    if (df.path.empty()) throw ConfigError("eval needs --data or --config");
    // Parse with the default vocabulary so that a foreign element is reported
    // as a checkpoint incompatibility rather than a parse failure.
    auto vocab = data::ElementVocabulary::standard();
    std::vector<std::string> symbols = vocab.symbols();
    for (const auto& s : ck.vocab.symbols())
      if (!vocab.contains(s)) symbols.push_back(s);
    ds = data::load_dataset(source_from(df, data::ElementVocabulary(symbols)));
  }
  const auto rep = train::evaluate(ck, ds, df.threads);
  json doc = {{"property", rep.property}, {"unit", rep.unit}, {"count", ds.size()}, {"mae", rep.mae},
              {"normalized_mse", rep.normalized_mse}, {"epoch", ck.epoch}};
  if (residuals) {
    json rs = json::array();
    for (const auto& r : rep.residuals)
      rs.push_back({{"id", r.id}, {"target", r.target}, {"prediction", r.prediction}});
    doc["residuals"] = rs;
  }
  out << doc.dump(2) << '\n';
  return exit_ok;
}

int cmd_predict(const std::string& checkpoint, const DataFlags& df, std::ostream& out) {
  const auto ck = model::load_checkpoint(checkpoint);
  if (df.path.empty()) throw ConfigError("predict needs --input");
  const auto ds = data::load_dataset(source_from(df, ck.vocab));
  const auto values = train::predict_all(ck, ds, df.threads);
  for (std::size_t i = 0; i < ds.size(); ++i) fmt::print(out, "{}\t{}\n", ds[i].id, values[i]);
  return exit_ok;
}

struct GradcheckFlags {
  train::GradcheckOptions options;
  std::size_t seeds = 1;
  std::string fault;
};

int cmd_gradcheck(const GradcheckFlags& f, std::ostream& out, std::ostream& err) {
  struct FaultGuard {
    ~FaultGuard() { ad::testing::clear_backward_fault(); }
  } guard;
  if (!f.fault.empty()) {
    bool found = false;
    for (int op = 0; op <= static_cast<int>(ad::Op::sum); ++op)
      if (f.fault == ad::op_name(static_cast<ad::Op>(op))) {
        ad::testing::inject_backward_fault(static_cast<ad::Op>(op));
        found = true;
      }
    if (!found) throw ConfigError("unknown op \"" + f.fault + "\"");
  }
  bool all_passed = true;
  train::TensorCheck worst;
  double worst_err = -1.0;
  for (std::size_t s = 0; s < f.seeds; ++s) {
    auto o = f.options;
    o.seed = f.options.seed + s;
    const auto r = train::run_gradcheck(o);
    out << json({{"seed", o.seed},
                 {"max_rel_error", r.worst.rel_error},
                 {"worst_parameter", r.worst.name},
                 {"atoms", r.worst.atoms},
                 {"passed", r.passed}})
               .dump()
        << '\n';
    all_passed = all_passed && r.passed;
    if (r.worst.rel_error > worst_err) {
      worst_err = r.worst.rel_error;
      worst = r.worst;
    }
  }
  if (!all_passed) {
    fmt::print(err, "gradcheck failed: worst parameter {} (N = {}) relative error {:.3e} >= {:.1e}\n", worst.name,
               worst.atoms, worst.rel_error, f.options.tolerance);
    return exit_gradcheck;
  }
  return exit_ok;
}

struct SynthFlags {
  std::string out;
  std::string format = "xyz";
  data::SyntheticOptions options;
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  const auto ds = data::make_synthetic_dataset(f.options);
  const fs::path dest = f.out;
  if (f.format == "tabular") {
    if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
    write_text(dest, data::format_tabular(ds));
  } else {
    fs::create_directories(dest);
    data::PropertySchema schema;
    schema.id_column = 0;
    schema.properties = {{data::synthetic_geometric_property, 1, "1/Angstrom"},
                         {data::synthetic_carbon_property, 2, "atoms"}};
    for (std::size_t i = 0; i < ds.size(); ++i)
      write_text(dest / fmt::format("{}.xyz", ds[i].id), data::format_extended_xyz(ds[i], schema));
    write_text(dest / "schema.json", data::format_schema(schema));
  }
  out << json({{"written", dest.generic_string()}, {"molecules", ds.size()}}).dump() << '\n';
  return exit_ok;
}

int guarded(const std::function<int()>& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_config;
  } catch (const DimensionError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_config;
  } catch (const DataError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_data;
  } catch (const ParseError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_data;
  } catch (const VocabularyError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_data;
  } catch (const NumericalError& e) {
    fmt::print(err, "error: numerical abort: {}\n", e.what());
    return exit_numerical;
  } catch (const fs::filesystem_error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_data;
  } catch (const std::exception& e) {
    fmt::print(err, "internal error: {}\n", e.what());
    return exit_internal;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gated message-passing regression of molecular properties", "ggrnet"};
  app.require_subcommand(1);

  RunFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Split, normalize, train and evaluate on one target property");
  add_run_flags(*train_cmd, train_flags);

  RunFlags ablate_flags;
  std::string which;
  bool table = false;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train the full model and feature ablations side by side");
  add_run_flags(*ablate_cmd, ablate_flags);
  ablate_cmd->add_option("--which", which, "no_count, no_distance, no_atom_embed or all")->required();
  ablate_cmd->add_flag("--table", table, "Print a text table instead of JSON");

  std::string eval_ckpt, eval_config, eval_part = "test";
  bool residuals = false;
  DataFlags eval_data;
  auto* eval_cmd = app.add_subcommand("eval", "Report the MAE of a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  add_data_flags(*eval_cmd, eval_data, "--data", "Dataset file or directory");
  eval_cmd->add_option("--config", eval_config, "Evaluate on a partition of this run configuration's split");
  eval_cmd->add_option("--split", eval_part, "Partition used with --config")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  eval_cmd->add_flag("--residuals", residuals, "Include per-molecule predictions");

  std::string pred_ckpt;
  DataFlags pred_data;
  auto* pred_cmd = app.add_subcommand("predict", "Predict the target property, one line per molecule");
  pred_cmd->add_option("--checkpoint", pred_ckpt, "Checkpoint file")->required();
  add_data_flags(*pred_cmd, pred_data, "--input", "Molecule file or directory");

  GradcheckFlags gc;
  std::string atoms_list = "1,2,4,6";
  auto* gc_cmd = app.add_subcommand("gradcheck", "Compare analytic and central-difference gradients");
  gc_cmd->add_option("--seed", gc.options.seed, "First seed");
  gc_cmd->add_option("--seeds", gc.seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--d-atom", gc.options.d_atom, "Atom embedding width")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--d-count", gc.options.d_count, "Count embedding width")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--d-h", gc.options.d_h, "Hidden width")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--steps", gc.options.steps, "Message-passing steps T")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--atoms", atoms_list, "Comma-separated atom counts");
  gc_cmd->add_option("--step", gc.options.step, "Finite-difference step");
  gc_cmd->add_option("--tolerance", gc.options.tolerance, "Maximum relative error");
  gc_cmd->add_option("--inject-fault", gc.fault)->group("");

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic point-cloud dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory (xyz) or file (tabular)")->required();
  synth_cmd->add_option("--format", synth.format, "xyz or tabular")->check(CLI::IsMember({"xyz", "tabular"}));
  synth_cmd->add_option("--count", synth.options.count, "Number of molecules")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.options.seed, "Generator seed");
  synth_cmd->add_option("--min-atoms", synth.options.min_atoms, "Fewest atoms per molecule");
  synth_cmd->add_option("--max-atoms", synth.options.max_atoms, "Most atoms per molecule");
  synth_cmd->add_option("--scale-min", synth.options.scale_min, "Smallest length scale");
  synth_cmd->add_option("--scale-max", synth.options.scale_max, "Largest length scale");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  return guarded(
      [&]() -> int {
        if (*train_cmd) return cmd_train(train_flags, out, err);
        if (*ablate_cmd) return cmd_ablate(ablate_flags, which, table, out, err);
        if (*eval_cmd) return cmd_eval(eval_ckpt, eval_data, eval_config, eval_part, residuals, out);
        if (*pred_cmd) return cmd_predict(pred_ckpt, pred_data, out);
        if (*gc_cmd) {
          gc.options.atom_counts.clear();
          std::size_t pos = 0;
          while (pos < atoms_list.size()) {
            const auto comma = atoms_list.find(',', pos);
            const auto item = atoms_list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            try {
              gc.options.atom_counts.push_back(std::stoul(item));
            } catch (const std::exception&) {
              throw ConfigError("--atoms expects comma-separated integers, got \"" + atoms_list + "\"");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
          }
          return cmd_gradcheck(gc, out, err);
        }
        if (*synth_cmd) return cmd_synth(synth, out);
        return exit_config;
      },
      err);
}

}  // namespace ggrnet::cli

#include "helpers.hpp"

#include "ggrnet/cli/app.hpp"
#include "ggrnet/cli/config.hpp"
#include "ggrnet/errors.hpp"
#include "ggrnet/model/checkpoint.hpp"
#include "ggrnet/model/ggrnet.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <sstream>

using namespace ggrnet;
using json = nlohmann::json;
using testutil::slurp;
using testutil::TempDir;
using testutil::write_file;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string sample_config() { return (fs::path(GGRNET_DATA_DIR) / "sample.cfg").string(); }

Result train_sample(const fs::path& out, std::vector<std::string> extra = {}) {
  std::vector<std::string> args = {"train", "--config", sample_config(), "--out", out.string(), "--epochs", "3"};
  args.insert(args.end(), extra.begin(), extra.end());
  return run(args);
}

std::vector<json> metrics(const fs::path& file) {
  std::vector<json> lines;
  std::istringstream in(slurp(file));
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(json::parse(line));
  return lines;
}

std::vector<json> without_seconds(std::vector<json> lines) {
  for (auto& l : lines) l.erase("seconds");
  return lines;
}

const char* one_atom_xyz = "1\nlonely 0.0 0.0\nC 0.5 -0.5 2.0\n";

}  // namespace

TEST_CASE("help lists every command") {
  const auto r = run({"--help"});
  CHECK(r.code == 0);
  for (const char* cmd : {"train", "eval", "predict", "gradcheck", "ablate", "synth"})
    CHECK(r.out.find(cmd) != std::string::npos);
  CHECK(run({}).code == cli::exit_config);
  CHECK(run({"frobnicate"}).code == cli::exit_config);
}

TEST_CASE("train on the bundled sample") {
  TempDir dir("train");
  const auto out = dir / "run";
  const auto r = train_sample(out);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* f : {"manifest.cfg", "metrics.jsonl", "final.ckpt", "best.ckpt", "report.json", "test.csv"})
    CHECK(fs::exists(out / f));
  const auto lines = metrics(out / "metrics.jsonl");
  REQUIRE(lines.size() == 3);
  for (const char* key : {"epoch", "lr", "train_mse", "val_mae", "seconds"}) CHECK(lines[0].contains(key));
  CHECK(lines[0]["lr"].get<double>() == 0.03);

  const auto report = json::parse(slurp(out / "report.json"));
  CHECK(json::parse(r.out) == report);
  CHECK(report["property"] == "inv_dist_sum");
  CHECK(report["unit"] == "1/Angstrom");
  CHECK(report["runs"].size() == 1);
  CHECK(report["runs"][0]["sizes"] == json::array({8, 1, 1}));
  const double test_mae = report["runs"][0]["test_mae"].get<double>();

  SUBCASE("epochs override gives exactly one record") {
    const auto one = run({"train", "--config", sample_config(), "--out", (dir / "one").string(), "--epochs", "1"});
    REQUIRE(one.code == 0);
    CHECK(metrics(dir / "one" / "metrics.jsonl").size() == 1);
  }
  SUBCASE("eval on the written test split reproduces the report") {
    const auto e = run({"eval", "--checkpoint", (out / "best.ckpt").string(), "--data", (out / "test.csv").string()});
    REQUIRE_MESSAGE(e.code == 0, e.err);
    const auto doc = json::parse(e.out);
    CHECK(doc["mae"].get<double>() == test_mae);
    CHECK(doc["count"] == 1);
    const auto via_manifest = run({"eval", "--checkpoint", (out / "best.ckpt").string(), "--config",
                                   (out / "manifest.cfg").string(), "--split", "test"});
    REQUIRE_MESSAGE(via_manifest.code == 0, via_manifest.err);
    CHECK(json::parse(via_manifest.out)["mae"].get<double>() == test_mae);
    const auto residuals = run({"eval", "--checkpoint", (out / "best.ckpt").string(), "--config",
                                (out / "manifest.cfg").string(), "--split", "all", "--residuals"});
    CHECK(json::parse(residuals.out)["residuals"].size() == 10);
  }
  SUBCASE("corrupted checkpoint") {
    std::string bytes = slurp(out / "best.ckpt");
    bytes[bytes.size() / 2] ^= 0x01;
    write_file(dir / "bad.ckpt", bytes);
    const auto e = run({"eval", "--checkpoint", (dir / "bad.ckpt").string(), "--data", (out / "test.csv").string()});
    CHECK(e.code == cli::exit_config);
    CHECK(e.err.find("checksum") != std::string::npos);
  }
  SUBCASE("empty evaluation set") {
    write_file(dir / "empty.csv", "");
    const auto e = run({"eval", "--checkpoint", (out / "best.ckpt").string(), "--data", (dir / "empty.csv").string()});
    CHECK(e.code == cli::exit_data);
  }
  SUBCASE("checkpoint vocabulary mismatch") {
    write_file(dir / "f.csv", "symbols,coords,inv_dist_sum\nF H,0 0 0 1 0 0,1.0\n");
    const auto e = run({"eval", "--checkpoint", (out / "best.ckpt").string(), "--data", (dir / "f.csv").string()});
    CHECK(e.code == cli::exit_config);
    CHECK(e.err.find("\"F\"") != std::string::npos);
  }
  SUBCASE("predict a single atom") {
    write_file(dir / "one.xyz", one_atom_xyz);
    const auto p1 = run({"predict", "--checkpoint", (out / "final.ckpt").string(), "--input", (dir / "one.xyz").string()});
    REQUIRE_MESSAGE(p1.code == 0, p1.err);
    const auto p2 = run({"predict", "--checkpoint", (out / "final.ckpt").string(), "--input", (dir / "one.xyz").string()});
    CHECK(p1.out == p2.out);
    const auto tab = p1.out.find('\t');
    REQUIRE(tab != std::string::npos);
    const double value = std::stod(p1.out.substr(tab + 1));

    const auto ck = model::load_checkpoint(out / "final.ckpt");
    data::Molecule m;
    m.symbols = {"O"};
    m.coords = {{0, 0, 0}};
    const double z = model::predict(ck.params, model::prepare(m, ck.vocab, ck.count_rows(), ck.config), ck.config);
    CHECK(value == ck.normalizer.invert(z));
  }
  SUBCASE("predict rejects unknown elements and truncated files") {
    write_file(dir / "xx.xyz", "2\nm 0\nC 0 0 0\nXx 1 0 0\n");
    const auto bad = run({"predict", "--checkpoint", (out / "final.ckpt").string(), "--input", (dir / "xx.xyz").string()});
    CHECK(bad.code == cli::exit_data);
    CHECK(bad.err.find("Xx") != std::string::npos);
    write_file(dir / "short.xyz", "3\nm 0\nC 0 0 0\nH 1 0 0\n");
    const auto cut =
        run({"predict", "--checkpoint", (out / "final.ckpt").string(), "--input", (dir / "short.xyz").string()});
    CHECK(cut.code == cli::exit_data);
    CHECK(cut.err.find("line 5") != std::string::npos);
  }
}

TEST_CASE("rerunning a manifest reproduces the run") {
  TempDir dir("rerun");
  REQUIRE(train_sample(dir / "a").code == 0);
  const auto b = run({"train", "--config", (dir / "a" / "manifest.cfg").string(), "--out", (dir / "b").string()});
  REQUIRE_MESSAGE(b.code == 0, b.err);
  CHECK(slurp(dir / "a" / "final.ckpt") == slurp(dir / "b" / "final.ckpt"));
  CHECK(slurp(dir / "a" / "best.ckpt") == slurp(dir / "b" / "best.ckpt"));
  CHECK(without_seconds(metrics(dir / "a" / "metrics.jsonl")) == without_seconds(metrics(dir / "b" / "metrics.jsonl")));
  CHECK(slurp(dir / "a" / "test.csv") == slurp(dir / "b" / "test.csv"));
}

TEST_CASE("multiple runs vary the seed and summarize") {
  TempDir dir("runs");
  const auto r = train_sample(dir / "multi", {"--runs", "3"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto report = json::parse(r.out);
  REQUIRE(report["runs"].size() == 3);
  std::vector<double> maes;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& run_k = report["runs"][k];
    CHECK(run_k["seed"] == 1 + k);
    CHECK(run_k["split_seed"] == 7);
    CHECK(fs::exists(dir / "multi" / ("run_" + std::to_string(k)) / "best.ckpt"));
    CHECK(fs::exists(dir / "multi" / ("run_" + std::to_string(k)) / "manifest.cfg"));
    maes.push_back(run_k["test_mae"].get<double>());
  }
  CHECK(report["test_mae_mean"].get<double>() == doctest::Approx((maes[0] + maes[1] + maes[2]) / 3.0));
  CHECK(report["test_mae_spread"].get<double>() >= 0.0);

  const auto resplit = train_sample(dir / "resplit", {"--runs", "2", "--set", "split.resplit=true"});
  REQUIRE(resplit.code == 0);
  CHECK(json::parse(resplit.out)["runs"][1]["split_seed"] == 8);
}

TEST_CASE("train error exits") {
  TempDir dir("errors");
  SUBCASE("missing dataset path") {
    const auto r = train_sample(dir / "x", {"--set", "data.path=" + (dir / "nowhere").string()});
    CHECK(r.code == cli::exit_data);
    CHECK(r.err.find("nowhere") != std::string::npos);
  }
  SUBCASE("unknown key") {
    const auto r = train_sample(dir / "x", {"--set", "model.width=3"});
    CHECK(r.code == cli::exit_config);
    CHECK(r.err.find("model.width") != std::string::npos);
  }
  SUBCASE("malformed value") {
    CHECK(train_sample(dir / "x", {"--set", "train.alpha0=fast"}).code == cli::exit_config);
    CHECK(train_sample(dir / "x", {"--set", "model.d_h=0"}).code == cli::exit_config);
    CHECK(train_sample(dir / "x", {"--set", "split.train=0.95"}).code == cli::exit_config);
  }
  SUBCASE("missing config file and flag") {
    CHECK(run({"train", "--config", (dir / "none.cfg").string()}).code != 0);
    CHECK(run({"train"}).code == cli::exit_config);
  }
  SUBCASE("numerical abort") {
    const auto r = train_sample(dir / "x", {"--set", "train.alpha0=1e300", "--set", "train.clip_norm=1e300"});
    CHECK(r.code == cli::exit_numerical);
    CHECK(r.err.find("epoch") != std::string::npos);
  }
  SUBCASE("property missing from the dataset") {
    CHECK(train_sample(dir / "x", {"--set", "train.target=gap"}).code == cli::exit_data);
  }
}

TEST_CASE("run configuration files") {
  TempDir dir("config");
  const auto cfg = cli::load_run_config(sample_config());
  CHECK(cfg.data_path == fs::path(GGRNET_DATA_DIR) / "sample");
  CHECK(cfg.train.alpha0 == 0.03);
  CHECK(cfg.train.epochs == 20);
  CHECK(cfg.train.model.steps == 3);
  CHECK(cfg.split.seed == 7);

  const auto manifest = cli::format_manifest(cfg);
  write_file(dir / "m.cfg", manifest);
  CHECK(cli::format_manifest(cli::load_run_config(dir / "m.cfg")) == manifest);
  for (const auto& key : cli::config_keys()) CHECK(manifest.find(key + " = ") != std::string::npos);

  auto c = cfg;
  cli::apply_override(c, "train.preset=qm9");
  CHECK(c.train.alpha0 == 0.01);
  CHECK(c.train.epochs == 200);
  cli::apply_override(c, "model.use_distance_feature=false");
  CHECK_FALSE(c.train.model.use_distance_feature);
  CHECK_THROWS_AS(cli::apply_override(c, "no_equals_sign"), ConfigError);
  CHECK_THROWS_AS(cli::apply_override(c, "model.T=-1"), ConfigError);
  auto zero_threads = c;
  cli::apply_override(zero_threads, "run.threads=0");
  CHECK_THROWS_AS(zero_threads.validate(), ConfigError);
  CHECK_THROWS_AS(cli::parse_key_values("just words\n"), ConfigError);

  const auto kv = cli::parse_key_values("# comment\na = 1  # trailing\n\nb=two\n");
  REQUIRE(kv.size() == 2);
  CHECK(kv[0] == std::pair<std::string, std::string>{"a", "1"});
  CHECK(kv[1].second == "two");
}

TEST_CASE("gradcheck command") {
  const auto r = run({"gradcheck", "--seeds", "2"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::istringstream in(r.out);
  int seeds = 0;
  for (std::string line; std::getline(in, line);) {
    const auto doc = json::parse(line);
    CHECK(doc["passed"] == true);
    CHECK(doc["max_rel_error"].get<double>() < 1e-5);
    ++seeds;
  }
  CHECK(seeds == 2);

  const auto bad = run({"gradcheck", "--inject-fault", "sigmoid"});
  CHECK(bad.code == cli::exit_gradcheck);
  CHECK(bad.err.find("worst parameter") != std::string::npos);
  const auto after = run({"gradcheck"});
  CHECK(after.code == 0);
  CHECK(run({"gradcheck", "--inject-fault", "nonsense"}).code == cli::exit_config);
}

TEST_CASE("ablate command") {
  TempDir dir("ablate");
  const auto bad = run({"ablate", "--config", sample_config(), "--which", "no_bonds"});
  CHECK(bad.code == cli::exit_config);
  for (const char* name : {"no_count", "no_distance", "no_atom_embed", "all"})
    CHECK(bad.err.find(name) != std::string::npos);

  const auto table = run({"ablate", "--config", sample_config(), "--which", "all", "--table", "--epochs", "2"});
  REQUIRE_MESSAGE(table.code == 0, table.err);
  for (const char* label : {"Full model (GGRNet)", "Full model without x_N", "Full model without {d_vw}",
                            "Full model without {x_v}"})
    CHECK(table.out.find(label) != std::string::npos);

  const auto one = run({"ablate", "--config", sample_config(), "--which", "no_distance", "--epochs", "2", "--out",
                        (dir / "abl").string()});
  REQUIRE_MESSAGE(one.code == 0, one.err);
  const auto doc = json::parse(one.out);
  CHECK(doc["rows"].size() == 2);
  CHECK(doc["rows"][1]["ablation"] == "no_distance");
  CHECK(json::parse(slurp(dir / "abl" / "ablation.json")) == doc);
}

TEST_CASE("synth command writes loadable data") {
  TempDir dir("synth");
  const auto r = run({"synth", "--out", (dir / "s").string(), "--count", "4", "--seed", "3"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  data::DataSource src;
  src.path = dir / "s";
  src.schema = data::load_schema(dir / "s" / "schema.json");
  const auto ds = data::load_dataset(src);
  CHECK(ds.size() == 4);
  CHECK(ds.has_property("carbon_count"));

  const auto tab = run({"synth", "--out", (dir / "s.csv").string(), "--format", "tabular", "--count", "5"});
  REQUIRE(tab.code == 0);
  src = {};
  src.path = dir / "s.csv";
  CHECK(data::load_dataset(src).size() == 5);
  CHECK(run({"synth", "--out", (dir / "bad").string(), "--min-atoms", "6", "--max-atoms", "2"}).code ==
        cli::exit_config);
}

TEST_CASE("bundled QM9 schema and configuration") {
  const fs::path root = fs::path(GGRNET_DATA_DIR).parent_path();
  const auto schema = data::load_schema(root / "schemas" / "qm9.json");
  const auto builtin = data::PropertySchema::qm9();
  CHECK(schema.id_column == builtin.id_column);
  REQUIRE(schema.properties.size() == builtin.properties.size());
  for (std::size_t i = 0; i < schema.properties.size(); ++i) {
    CHECK(schema.properties[i].name == builtin.properties[i].name);
    CHECK(schema.properties[i].column == builtin.properties[i].column);
    CHECK(schema.properties[i].unit == builtin.properties[i].unit);
  }
  const auto cfg = cli::load_run_config(root / "configs" / "qm9_homo.cfg");
  CHECK(cfg.train.target_property == "HOMO");
  CHECK(cfg.train.alpha0 == 0.01);
  CHECK(cfg.train.epochs == 200);
  CHECK(cfg.runs == 3);
  CHECK(cfg.data_path == root / "data" / "qm9");
}

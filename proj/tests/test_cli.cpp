#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <string>
#include <vector>

#include "geln/cli.hpp"
#include "geln/cli_config.hpp"
#include "geln/cooccur.hpp"
#include "geln/dataset.hpp"
#include "geln/errors.hpp"
#include "geln/metrics.hpp"
#include "helpers.hpp"

using namespace geln;
namespace fs = std::filesystem;

namespace {

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"geln"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::dispatch(static_cast<int>(argv.size()), argv.data());
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("synth writes a loadable manifest") {
  const auto dir = temp_dir("geln_cli_synth");
  CHECK(run({"synth", "--out", dir.string(), "--seed", "5", "--n-train", "12", "--n-val", "4",
             "--n-test", "4", "--clinical-dim", "6", "--dermoscopy-dim", "6"}) == 0);
  const Dataset ds = load_manifest((dir / "manifest.json").string());
  CHECK(ds.schema().total_classes() == 24);
  CHECK(ds.size() == 20);
  fs::remove_all(dir);
}

TEST_CASE("cm subcommand reproduces the hand-counted matrix") {
  const auto dir = temp_dir("geln_cli_cm");
  const Dataset toy = test::toy_cooccur_dataset();
  save_manifest(toy, (dir / "manifest.json").string());
  CHECK(run({"cm", "--manifest", (dir / "manifest.json").string(), "--out", dir.string()}) == 0);

  const auto loaded = load_cm_csv((dir / "cm.csv").string(), toy.schema());
  const Matrix oracle = test::cm_oracle(toy);
  REQUIRE(loaded.cm.rows() == oracle.rows());
  for (std::size_t i = 0; i < oracle.rows(); ++i)
    for (std::size_t j = 0; j < oracle.cols(); ++j)
      CHECK(loaded.cm(i, j) == oracle(i, j));
  // spot checks against the hand arithmetic: p(B|A) = 2/3, p(A|B) = 1
  CHECK(loaded.cm(1, 3) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(loaded.cm(3, 1) == 1.0);
  fs::remove_all(dir);
}

TEST_CASE("pipeline without a validation split records half/half weights") {
  const auto dir = temp_dir("geln_cli_pipeline");
  CHECK(run({"synth", "--out", dir.string(), "--seed", "3", "--n-train", "24", "--n-val", "0",
             "--n-test", "12", "--clinical-dim", "6", "--dermoscopy-dim", "6"}) == 0);
  std::ofstream(dir / "cfg.ini") << "[trainer]\nepochs = 3\nswa_last_epochs = 1\n"
                                 << "[models]\nencoder_hidden = 8\nfeature_dim = 6\n"
                                 << "embed_dim = 4\ngcn_hidden = 4\ntrunk_hidden = 6\n";
  CHECK(run({"pipeline", "--manifest", (dir / "manifest.json").string(), "--out",
             (dir / "run").string(), "--config", (dir / "cfg.ini").string(), "--seed", "1"}) == 0);

  const auto report = MetricsReport::from_json(slurp(dir / "run" / "report_geln.json"));
  REQUIRE(report.ensemble_weights.has_value());
  CHECK(report.ensemble_weights->weights == std::vector<double>{0.5, 0.5});
  CHECK(report.ensemble_weights->sources == std::vector<std::string>{"P_F", "P_G"});
  fs::remove_all(dir);
}

TEST_CASE("repeat is reproducible across invocations") {
  const auto dir = temp_dir("geln_cli_repeat");
  CHECK(run({"synth", "--out", dir.string(), "--seed", "9", "--n-train", "20", "--n-val", "8",
             "--n-test", "8", "--clinical-dim", "5", "--dermoscopy-dim", "5"}) == 0);
  std::ofstream(dir / "cfg.ini") << "[trainer]\nepochs = 2\nswa_last_epochs = 1\n"
                                 << "[models]\nencoder_hidden = 6\nfeature_dim = 5\n"
                                 << "embed_dim = 3\ngcn_hidden = 3\ntrunk_hidden = 4\n";
  const std::vector<std::string> args = {"repeat",  "--manifest",
                                         (dir / "manifest.json").string(),
                                         "--out",   (dir / "r1").string(),
                                         "--config", (dir / "cfg.ini").string(),
                                         "--seed",  "7",
                                         "--repeats", "3"};
  CHECK(run(args) == 0);
  auto args2 = args;
  args2[4] = (dir / "r2").string();
  CHECK(run(args2) == 0);
  CHECK(slurp(dir / "r1" / "aggregate.json") == slurp(dir / "r2" / "aggregate.json"));
  fs::remove_all(dir);
}

TEST_CASE("train then eval reuses the checkpoints") {
  const auto dir = temp_dir("geln_cli_train_eval");
  CHECK(run({"synth", "--out", dir.string(), "--seed", "2", "--n-train", "20", "--n-val", "8",
             "--n-test", "8", "--clinical-dim", "5", "--dermoscopy-dim", "5"}) == 0);
  std::ofstream(dir / "cfg.ini") << "[trainer]\nepochs = 3\nswa_last_epochs = 1\n"
                                 << "[models]\nencoder_hidden = 6\nfeature_dim = 5\n"
                                 << "embed_dim = 3\ngcn_hidden = 3\ntrunk_hidden = 4\n";
  CHECK(run({"train", "--manifest", (dir / "manifest.json").string(), "--out",
             (dir / "model").string(), "--config", (dir / "cfg.ini").string(), "--seed", "4",
             "--variant", "unfreeze"}) == 0);
  CHECK(fs::exists(dir / "model" / "stage1_fusion.ckpt"));
  CHECK(fs::exists(dir / "model" / "stage2_graph.ckpt"));
  CHECK(fs::exists(dir / "model" / "train_fusion.jsonl"));

  CHECK(run({"eval", "--manifest", (dir / "manifest.json").string(), "--model-dir",
             (dir / "model").string(), "--out", (dir / "eval").string()}) == 0);
  const auto report = MetricsReport::from_json(slurp(dir / "eval" / "report_geln.json"));
  CHECK(report.n_cases == 8);
  fs::remove_all(dir);
}

TEST_CASE("exit codes distinguish i/o from validation problems") {
  const auto dir = temp_dir("geln_cli_errors");
  // missing manifest file: I/O error
  CHECK(run({"cm", "--manifest", (dir / "missing.json").string(), "--out", dir.string()}) == 2);
  // malformed manifest: validation error
  std::ofstream(dir / "bad.json") << "{broken";
  CHECK(run({"cm", "--manifest", (dir / "bad.json").string(), "--out", dir.string()}) == 1);
  // bad flag value
  const Dataset toy = test::toy_cooccur_dataset();
  save_manifest(toy, (dir / "toy.json").string());
  CHECK(run({"cm", "--manifest", (dir / "toy.json").string(), "--out", dir.string(), "--cm-mode",
             "bogus"}) == 1);
  // unknown flag
  CHECK(run({"cm", "--manifest", (dir / "toy.json").string(), "--out", dir.string(),
             "--frobnicate"}) == 1);
  // missing subcommand
  CHECK(run({}) == 1);
  fs::remove_all(dir);
}

TEST_CASE("config file parsing") {
  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_AS(cli::CliConfig::parse("[trainer]\nnot_a_key = 3\n"), ValidationError);
    CHECK_THROWS_AS(cli::CliConfig::parse("[bogus]\nepochs = 3\n"), ValidationError);
    CHECK_THROWS_AS(cli::CliConfig::parse("epochs = 3\n"), ValidationError);  // outside a section
  }
  SUBCASE("values reach the train config") {
    const auto cfg_file = cli::CliConfig::parse(
        "# comment\n[trainer]\nepochs = 12\nbase_lr = 0.001\nvariant = unfreeze\n"
        "[ensemble]\ngrid_step = 0.1\n[models]\nfeature_dim = 16\n");
    TrainConfig cfg;
    cfg_file.apply_to(cfg);
    CHECK(cfg.epochs == 12);
    CHECK(cfg.base_lr == 0.001);
    CHECK(cfg.variant == Variant::unfreeze);
    CHECK(cfg.grid_step == 0.1);
    CHECK(cfg.dims.feature_dim == 16);
  }
  SUBCASE("values reach the synth config") {
    const auto cfg_file = cli::CliConfig::parse(
        "[dataset]\nn_train = 44\ncorrelation_strength = 0.9\nclinical_dim = 7\n");
    SynthConfig cfg;
    cfg_file.apply_to(cfg);
    CHECK(cfg.n_train == 44);
    CHECK(cfg.correlation_strength == 0.9);
    CHECK(cfg.feature_dims.clinical == 7);
  }
  SUBCASE("type errors are reported with the key") {
    CHECK_THROWS_AS(
        [] {
          TrainConfig cfg;
          cli::CliConfig::parse("[trainer]\nepochs = soon\n").apply_to(cfg);
        }(),
        ValidationError);
  }
}

TEST_CASE("preset precedence: flag beats config file beats desk default") {
  const auto dir = temp_dir("geln_cli_preset");
  const Dataset toy = test::toy_cooccur_dataset();
  save_manifest(toy, (dir / "toy.json").string());
  std::ofstream(dir / "paper.ini") << "[trainer]\npreset = paper\n";

  // file preset wins over the desk default; long paper-scale runs must fail
  // fast here, so shrink epochs through the same file and check it applied
  std::ofstream(dir / "mixed.ini") << "[trainer]\npreset = paper\nepochs = 250\n";
  // resolve via the config layer directly
  {
    TrainConfig cfg = TrainConfig::desk();
    const auto file = cli::CliConfig::load((dir / "paper.ini").string());
    CHECK(file.has("trainer", "preset"));
    CHECK(file.get("trainer", "preset") == "paper");
  }

  // flag --preset desk overrides a paper preset from the file: the run uses
  // desk epochs (60), which finishes quickly on a tiny manifest
  std::vector<Case> cases;
  for (int i = 0; i < 8; ++i) {
    auto c = test::toy_case("c" + std::to_string(i), i < 6 ? Split::train : Split::test,
                            toy.schema(), {{"A", i % 2 ? "PRS" : "ABS"}});
    cases.push_back(std::move(c));
  }
  save_manifest(Dataset(toy.schema(), toy.feature_dims(), std::move(cases)),
                (dir / "tiny.json").string());
  std::ofstream(dir / "tiny.ini") << "[trainer]\npreset = paper\nepochs = 2\n"
                                  << "swa_last_epochs = 1\nbatch_size = 2\n"
                                  << "[models]\nencoder_hidden = 4\nfeature_dim = 3\n"
                                  << "embed_dim = 2\ngcn_hidden = 2\ntrunk_hidden = 3\n";
  CHECK(run({"train", "--manifest", (dir / "tiny.json").string(), "--out",
             (dir / "m").string(), "--config", (dir / "tiny.ini").string()}) == 0);
  // the run config records the merged settings: paper lr with overridden epochs
  const std::string rc = slurp(dir / "m" / "run_config.json");
  CHECK(rc.find("\"epochs\": 2") != std::string::npos);
  CHECK(rc.find("3e-05") != std::string::npos);  // paper-scale base_lr survived
  fs::remove_all(dir);
}

TEST_CASE("synth flags override the config file") {
  const auto dir = temp_dir("geln_cli_synth_prec");
  std::ofstream(dir / "cfg.ini") << "[dataset]\nn_train = 5\nn_val = 2\nn_test = 2\n"
                                 << "clinical_dim = 3\ndermoscopy_dim = 3\n";
  CHECK(run({"synth", "--out", dir.string(), "--config", (dir / "cfg.ini").string(),
             "--n-train", "9"}) == 0);
  const Dataset ds = load_manifest((dir / "manifest.json").string());
  CHECK(ds.size() == 13);  // 9 from the flag + 2 + 2 from the file
  CHECK(ds.feature_dims().clinical == 3);
  fs::remove_all(dir);
}

TEST_CASE("eval rejects a manifest with a different schema") {
  const auto dir = temp_dir("geln_cli_eval_schema");
  CHECK(run({"synth", "--out", dir.string(), "--seed", "2", "--n-train", "12", "--n-val", "4",
             "--n-test", "4", "--clinical-dim", "4", "--dermoscopy-dim", "4"}) == 0);
  std::ofstream(dir / "cfg.ini") << "[trainer]\nepochs = 2\nswa_last_epochs = 1\n"
                                 << "[models]\nencoder_hidden = 4\nfeature_dim = 3\n"
                                 << "embed_dim = 2\ngcn_hidden = 2\ntrunk_hidden = 3\n";
  CHECK(run({"train", "--manifest", (dir / "manifest.json").string(), "--out",
             (dir / "m").string(), "--config", (dir / "cfg.ini").string()}) == 0);
  const Dataset other(test::three_binary_schema(), {4, 4},
                      {test::toy_case("t", Split::test, test::three_binary_schema(),
                                      {{"A", "PRS"}}, 4)});
  save_manifest(other, (dir / "other.json").string());
  CHECK(run({"eval", "--manifest", (dir / "other.json").string(), "--model-dir",
             (dir / "m").string(), "--out", (dir / "e").string()}) == 1);
  fs::remove_all(dir);
}

TEST_CASE("training logs are json lines with the stage loss key") {
  const auto dir = temp_dir("geln_cli_logs");
  CHECK(run({"synth", "--out", dir.string(), "--seed", "3", "--n-train", "10", "--n-val", "0",
             "--n-test", "2", "--clinical-dim", "4", "--dermoscopy-dim", "4"}) == 0);
  std::ofstream(dir / "cfg.ini") << "[trainer]\nepochs = 3\nswa_last_epochs = 1\nbatch_size = 4\n"
                                 << "[models]\nencoder_hidden = 4\nfeature_dim = 3\n"
                                 << "embed_dim = 2\ngcn_hidden = 2\ntrunk_hidden = 3\n";
  CHECK(run({"train", "--manifest", (dir / "manifest.json").string(), "--out",
             (dir / "m").string(), "--config", (dir / "cfg.ini").string()}) == 0);
  const std::string fusion_log = slurp(dir / "m" / "train_fusion.jsonl");
  const std::string graph_log = slurp(dir / "m" / "train_graph.jsonl");
  CHECK(std::count(fusion_log.begin(), fusion_log.end(), '\n') == 3);  // one line per epoch
  CHECK(std::count(graph_log.begin(), graph_log.end(), '\n') == 3);
  CHECK(fusion_log.find("\"L_F\"") != std::string::npos);
  CHECK(fusion_log.find("\"epoch\"") != std::string::npos);
  CHECK(fusion_log.find("\"lr\"") != std::string::npos);
  CHECK(fusion_log.find("\"wall_time_ms\"") != std::string::npos);
  CHECK(graph_log.find("\"L_G\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("help succeeds for every subcommand and shows defaults") {
  for (const std::string& sub :
       {std::string("synth"), std::string("cm"), std::string("train"), std::string("eval"),
        std::string("pipeline"), std::string("repeat")}) {
    CHECK(run({sub, "--help"}) == 0);
  }
  CHECK(run({"--help"}) == 0);
}

#include "geln/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "geln/checkpoint.hpp"
#include "geln/cli_config.hpp"
#include "geln/cooccur.hpp"
#include "geln/dataset.hpp"
#include "geln/errors.hpp"
#include "geln/predictions.hpp"
#include "geln/trainer.hpp"

namespace geln::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void announce(const fs::path& path) { std::cout << "wrote " << path.string() << "\n"; }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory: " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
  announce(path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_train_log(const fs::path& path, const TrainLog& log, const std::string& loss_key) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write log: " + path.string());
  for (const auto& rec : log) {
    json line = {{"epoch", rec.epoch}, {"lr", rec.lr}, {loss_key, rec.loss},
                 {"wall_time_ms", rec.wall_ms}};
    out << line.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
  announce(path);
}

json train_config_to_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"base_lr", cfg.base_lr},
          {"min_lr", cfg.min_lr},
          {"swa_last_epochs", cfg.swa_last_epochs},
          {"variant", to_string(cfg.variant)},
          {"seed", cfg.seed},
          {"cm_mode", to_string(cfg.cm_mode)},
          {"grid_step", cfg.grid_step},
          {"dims",
           {{"encoder_hidden", cfg.dims.encoder_hidden},
            {"feature_dim", cfg.dims.feature_dim},
            {"embed_dim", cfg.dims.embed_dim},
            {"gcn_hidden", cfg.dims.gcn_hidden},
            {"trunk_hidden", cfg.dims.trunk_hidden},
            {"train_embedding", cfg.dims.train_embedding},
            {"embedding_csv", cfg.dims.embedding_csv}}}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.epochs = j.at("epochs").get<int>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.base_lr = j.at("base_lr").get<double>();
  cfg.min_lr = j.at("min_lr").get<double>();
  cfg.swa_last_epochs = j.at("swa_last_epochs").get<int>();
  cfg.variant = variant_from_string(j.at("variant").get<std::string>());
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.cm_mode = cm_mode_from_string(j.at("cm_mode").get<std::string>());
  cfg.grid_step = j.at("grid_step").get<double>();
  const auto& d = j.at("dims");
  cfg.dims.encoder_hidden = d.at("encoder_hidden").get<std::size_t>();
  cfg.dims.feature_dim = d.at("feature_dim").get<std::size_t>();
  cfg.dims.embed_dim = d.at("embed_dim").get<std::size_t>();
  cfg.dims.gcn_hidden = d.at("gcn_hidden").get<std::size_t>();
  cfg.dims.trunk_hidden = d.at("trunk_hidden").get<std::size_t>();
  cfg.dims.train_embedding = d.at("train_embedding").get<bool>();
  cfg.dims.embedding_csv = d.value("embedding_csv", std::string());
  return cfg;
}

void write_run_config(const fs::path& path, const Dataset& ds, const TrainConfig& cfg) {
  json doc;
  doc["schema"] = json::parse(schema_to_json_text(ds.schema()));
  doc["feature_dims"] = {{"clinical", ds.feature_dims().clinical},
                         {"dermoscopy", ds.feature_dims().dermoscopy}};
  doc["trainer"] = train_config_to_json(cfg);
  write_text(path, doc.dump(2) + "\n");
}

struct RunConfig {
  LabelSchema schema;
  FeatureDims dims;
  TrainConfig train;
};

RunConfig load_run_config(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  }
  try {
    RunConfig rc;
    rc.schema = schema_from_json_text(doc.at("schema").dump());
    rc.dims.clinical = doc.at("feature_dims").at("clinical").get<std::size_t>();
    rc.dims.dermoscopy = doc.at("feature_dims").at("dermoscopy").get<std::size_t>();
    rc.train = train_config_from_json(doc.at("trainer"));
    return rc;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  }
}

FusionConfig fusion_config_for(const TrainConfig& cfg, const FeatureDims& dims) {
  FusionConfig fc;
  fc.clinical_dim = dims.clinical;
  fc.dermoscopy_dim = dims.dermoscopy;
  fc.hidden_dim = cfg.dims.encoder_hidden;
  fc.feature_dim = cfg.dims.feature_dim;
  return fc;
}

GraphConfig graph_config_for(const TrainConfig& cfg) {
  GraphConfig gc;
  gc.embed_dim = cfg.dims.embed_dim;
  gc.gcn_hidden = cfg.dims.gcn_hidden;
  gc.feature_dim = cfg.dims.feature_dim;
  gc.trunk_hidden = cfg.dims.trunk_hidden;
  gc.train_embedding = cfg.dims.train_embedding;
  return gc;
}

ParamList stage2_params(GraphModel& graph, std::optional<FusionModel>& live) {
  ParamList params = with_prefix("graph.", graph.params());
  if (live) {
    for (auto& p : with_prefix("fusion_live.", live->params())) params.push_back(p);
  }
  return params;
}

void save_stage_checkpoints(const fs::path& out, FusionModel& fusion, GraphModel& graph,
                            std::optional<FusionModel>& live) {
  auto fusion_params = fusion.params();
  save_checkpoint((out / "stage1_fusion.ckpt").string(), fusion_params);
  announce(out / "stage1_fusion.ckpt");
  auto params = stage2_params(graph, live);
  save_checkpoint((out / "stage2_graph.ckpt").string(), params);
  announce(out / "stage2_graph.ckpt");
}

struct LoadedModels {
  FusionModel fusion;
  GraphModel graph;
  std::optional<FusionModel> live;
};

LoadedModels load_models(const fs::path& model_dir, const RunConfig& rc) {
  LoadedModels m;
  m.fusion = FusionModel(fusion_config_for(rc.train, rc.dims), rc.schema.layout(), 0);
  auto fusion_params = m.fusion.params();
  load_checkpoint((model_dir / "stage1_fusion.ckpt").string(), fusion_params);

  m.graph = GraphModel(graph_config_for(rc.train), rc.schema, 0);
  if (rc.train.variant == Variant::unfreeze)
    m.live = FusionModel(fusion_config_for(rc.train, rc.dims), rc.schema.layout(), 0);
  auto params = stage2_params(m.graph, m.live);
  load_checkpoint((model_dir / "stage2_graph.ckpt").string(), params);
  return m;
}

void write_reports(const fs::path& out, const PipelineResult& result) {
  write_text(out / "report_fusion.json", result.report_fusion.to_json() + "\n");
  write_text(out / "report_fusion.csv", result.report_fusion.to_csv());
  write_text(out / "report_graph.json", result.report_graph.to_json() + "\n");
  write_text(out / "report_graph.csv", result.report_graph.to_csv());
  write_text(out / "report_geln.json", result.report_geln.to_json() + "\n");
  write_text(out / "report_geln.csv", result.report_geln.to_csv());
}

void print_summary(const PipelineResult& result) {
  std::printf("fusion  mean AUC %.4f (listed %.4f)\n", result.report_fusion.overall_mean_auc,
              result.report_fusion.listed_mean_auc);
  std::printf("graph   mean AUC %.4f (listed %.4f)\n", result.report_graph.overall_mean_auc,
              result.report_graph.listed_mean_auc);
  std::printf("geln    mean AUC %.4f (listed %.4f)  W_pf=%.3f W_pg=%.3f\n",
              result.report_geln.overall_mean_auc, result.report_geln.listed_mean_auc,
              result.total_weights.weights[0], result.total_weights.weights[1]);
}

// ------------------------------------------------------------- subcommands

struct CommonOpts {
  std::string manifest;
  std::string out;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string preset = "desk";
  std::string variant = "freeze";
  std::string cm_mode = "raw";
  double grid_step = 0.05;
  bool seed_set = false, preset_set = false, variant_set = false, cm_mode_set = false,
       grid_step_set = false;
};

TrainConfig resolve_train_config(const CommonOpts& opt) {
  std::optional<CliConfig> file;
  if (!opt.config_path.empty()) file = CliConfig::load(opt.config_path);

  // precedence: explicit flag > config file > desk default
  std::string preset = "desk";
  if (file && file->has("trainer", "preset")) preset = file->get("trainer", "preset");
  if (opt.preset_set) preset = opt.preset;
  TrainConfig cfg;
  if (preset == "desk") cfg = TrainConfig::desk();
  else if (preset == "paper") cfg = TrainConfig::paper_scale();
  else throw ValidationError("unknown preset '" + preset + "' (expected desk or paper)");

  if (file) file->apply_to(cfg);
  if (opt.seed_set) cfg.seed = opt.seed;
  if (opt.variant_set) cfg.variant = variant_from_string(opt.variant);
  if (opt.cm_mode_set) cfg.cm_mode = cm_mode_from_string(opt.cm_mode);
  if (opt.grid_step_set) cfg.grid_step = opt.grid_step;
  cfg.validate();
  return cfg;
}

struct SynthFlagSet {
  bool n_train = false, n_val = false, n_test = false;
  bool corr = false, noise = false, clin = false, derm = false;
};

int cmd_synth(const CommonOpts& opt, const SynthConfig& flags_cfg, const SynthFlagSet& given) {
  SynthConfig cfg;
  cfg.schema = spc_schema();
  if (!opt.config_path.empty()) CliConfig::load(opt.config_path).apply_to(cfg);
  // explicit flags override the config file
  if (given.n_train) cfg.n_train = flags_cfg.n_train;
  if (given.n_val) cfg.n_val = flags_cfg.n_val;
  if (given.n_test) cfg.n_test = flags_cfg.n_test;
  if (given.corr) cfg.correlation_strength = flags_cfg.correlation_strength;
  if (given.noise) cfg.noise_scale = flags_cfg.noise_scale;
  if (given.clin) cfg.feature_dims.clinical = flags_cfg.feature_dims.clinical;
  if (given.derm) cfg.feature_dims.dermoscopy = flags_cfg.feature_dims.dermoscopy;
  cfg.seed = opt.seed;

  const fs::path out(opt.out);
  ensure_dir(out);
  const Dataset ds = synth_generate(cfg);
  save_manifest(ds, (out / "manifest.json").string());
  announce(out / "manifest.json");
  return 0;
}

int cmd_cm(const CommonOpts& opt) {
  const Dataset ds = load_manifest(opt.manifest);
  auto cm = build_conditional_matrix(count_cooccurrence(ds));
  CmMode mode = opt.cm_mode_set ? cm_mode_from_string(opt.cm_mode) : CmMode::raw_conditional;
  if (mode == CmMode::row_stochastic) cm = normalize_matrix(cm, mode);
  const fs::path out(opt.out);
  ensure_dir(out);
  save_cm_csv(cm, ds.schema(), (out / "cm.csv").string());
  announce(out / "cm.csv");
  return 0;
}

int cmd_train(const CommonOpts& opt) {
  const TrainConfig cfg = resolve_train_config(opt);
  const Dataset full = load_manifest(opt.manifest);
  const auto parts = split(full);
  if (parts.train.empty()) throw ValidationError("train: manifest has no train cases");

  const fs::path out(opt.out);
  ensure_dir(out);

  auto cm = build_conditional_matrix(count_cooccurrence(full));
  if (cfg.cm_mode == CmMode::row_stochastic) cm = normalize_matrix(cm, CmMode::row_stochastic);
  save_cm_csv(cm, full.schema(), (out / "cm.csv").string());
  announce(out / "cm.csv");

  auto stage1 = train_fusion_stage(parts.train, cfg);
  auto stage2 = train_graph_stage(parts.train, cm.cm, stage1.model, cfg);

  write_run_config(out / "run_config.json", full, cfg);
  save_stage_checkpoints(out, stage1.model, stage2.graph, stage2.live_fusion);
  write_train_log(out / "train_fusion.jsonl", stage1.log, "L_F");
  write_train_log(out / "train_graph.jsonl", stage2.log, "L_G");
  return 0;
}

int cmd_eval(const CommonOpts& opt, const std::string& model_dir) {
  const fs::path mdir(model_dir);
  const RunConfig rc = load_run_config(mdir / "run_config.json");
  TrainConfig cfg = rc.train;
  if (opt.grid_step_set) cfg.grid_step = opt.grid_step;

  const Dataset full = load_manifest(opt.manifest);
  if (!(full.schema() == rc.schema))
    throw ValidationError("eval: manifest schema does not match the trained model");
  const auto parts = split(full);
  if (parts.test.empty()) throw ValidationError("eval: manifest has no test cases");

  auto cm = build_conditional_matrix(count_cooccurrence(full));
  if (cfg.cm_mode == CmMode::row_stochastic) cm = normalize_matrix(cm, CmMode::row_stochastic);

  LoadedModels models = load_models(mdir, rc);
  const FusionModel& graph_enc = models.live ? *models.live : models.fusion;
  const CategoryLayout layout = full.schema().layout();

  EnsembleWeights w_fusion, w_graph, w_total;
  if (!parts.val.empty()) {
    const Matrix val_targets = targets_matrix(parts.val);
    const auto fp = predict_fusion(models.fusion, parts.val);
    w_fusion = search_weights({&fp.p_fc, &fp.p_fd, &fp.p_ff}, val_targets, layout, cfg.grid_step);
    auto gp = predict_graph(models.graph, graph_enc, cm.cm, parts.val);
    w_graph = search_weights({&gp.p_gc, &gp.p_gd, &gp.p_gf}, val_targets, layout, cfg.grid_step);
    const auto pf_val = combine({&fp.p_fc, &fp.p_fd, &fp.p_ff}, w_fusion.weights,
                                PredictionSource::p_f);
    const auto pg_val = combine({&gp.p_gc, &gp.p_gd, &gp.p_gf}, w_graph.weights,
                                PredictionSource::p_g);
    w_total = search_weights({&pf_val, &pg_val}, val_targets, layout, cfg.grid_step);
  } else {
    w_fusion = uniform_weights({"P_FC", "P_FD", "P_FF"}, cfg.grid_step);
    w_graph = uniform_weights({"P_GC", "P_GD", "P_GF"}, cfg.grid_step);
    w_total = uniform_weights({"P_F", "P_G"}, cfg.grid_step);
  }

  const Matrix test_targets = targets_matrix(parts.test);
  const auto fp_test = predict_fusion(models.fusion, parts.test);
  const auto p_f = combine({&fp_test.p_fc, &fp_test.p_fd, &fp_test.p_ff}, w_fusion.weights,
                           PredictionSource::p_f);
  auto gp_test = predict_graph(models.graph, graph_enc, cm.cm, parts.test);
  const auto p_g = combine({&gp_test.p_gc, &gp_test.p_gd, &gp_test.p_gf}, w_graph.weights,
                           PredictionSource::p_g);
  const auto p_total = combine({&p_f, &p_g}, w_total.weights, PredictionSource::p_total);

  const fs::path out(opt.out);
  ensure_dir(out);
  const auto report_fusion = build_report(p_f, test_targets, full.schema(), w_fusion);
  const auto report_graph = build_report(p_g, test_targets, full.schema(), w_graph);
  const auto report_geln = build_report(p_total, test_targets, full.schema(), w_total);
  write_text(out / "report_fusion.json", report_fusion.to_json() + "\n");
  write_text(out / "report_fusion.csv", report_fusion.to_csv());
  write_text(out / "report_graph.json", report_graph.to_json() + "\n");
  write_text(out / "report_graph.csv", report_graph.to_csv());
  write_text(out / "report_geln.json", report_geln.to_json() + "\n");
  write_text(out / "report_geln.csv", report_geln.to_csv());
  std::printf("fusion  mean AUC %.4f\n", report_fusion.overall_mean_auc);
  std::printf("graph   mean AUC %.4f\n", report_graph.overall_mean_auc);
  std::printf("geln    mean AUC %.4f\n", report_geln.overall_mean_auc);
  return 0;
}

int run_pipeline_into(const fs::path& out, const Dataset& full, const TrainConfig& cfg) {
  ensure_dir(out);
  PipelineResult result = run_pipeline(full, cfg);

  write_run_config(out / "run_config.json", full, cfg);
  save_cm_csv(result.cm, full.schema(), (out / "cm.csv").string());
  announce(out / "cm.csv");
  save_stage_checkpoints(out, result.fusion, result.graph, result.live_fusion);
  write_train_log(out / "train_fusion.jsonl", result.fusion_log, "L_F");
  write_train_log(out / "train_graph.jsonl", result.graph_log, "L_G");
  write_reports(out, result);
  print_summary(result);
  return 0;
}

int cmd_pipeline(const CommonOpts& opt) {
  const TrainConfig cfg = resolve_train_config(opt);
  const Dataset full = load_manifest(opt.manifest);
  return run_pipeline_into(fs::path(opt.out), full, cfg);
}

int cmd_repeat(const CommonOpts& opt, int repeats) {
  if (repeats < 1) throw ValidationError("repeat: --repeats must be >= 1");
  const TrainConfig base_cfg = resolve_train_config(opt);
  const Dataset full = load_manifest(opt.manifest);
  const fs::path out(opt.out);
  ensure_dir(out);

  std::vector<double> fusion_auc, graph_auc, geln_auc;
  for (int r = 0; r < repeats; ++r) {
    TrainConfig cfg = base_cfg;
    cfg.seed = base_cfg.seed + static_cast<std::uint64_t>(r);
    char sub[32];
    std::snprintf(sub, sizeof(sub), "run_%03d", r);
    const fs::path run_dir = out / sub;
    ensure_dir(run_dir);
    PipelineResult result = run_pipeline(full, cfg);
    write_run_config(run_dir / "run_config.json", full, cfg);
    write_reports(run_dir, result);
    fusion_auc.push_back(result.report_fusion.overall_mean_auc);
    graph_auc.push_back(result.report_graph.overall_mean_auc);
    geln_auc.push_back(result.report_geln.overall_mean_auc);
  }

  const auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const auto std_of = [&](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  };

  json agg;
  agg["repeats"] = repeats;
  agg["base_seed"] = base_cfg.seed;
  for (const auto& [name, values] :
       {std::pair{"fusion", &fusion_auc}, {"graph", &graph_auc}, {"geln", &geln_auc}}) {
    agg[name] = {{"mean", mean_of(*values)}, {"std", std_of(*values)}, {"values", *values}};
  }
  write_text(out / "aggregate.json", agg.dump(2) + "\n");

  std::printf("%-8s %-12s %s\n", "model", "mean AUC", "std");
  std::printf("%-8s %-12.4f %.4f\n", "fusion", mean_of(fusion_auc), std_of(fusion_auc));
  std::printf("%-8s %-12.4f %.4f\n", "graph", mean_of(graph_auc), std_of(graph_auc));
  std::printf("%-8s %-12.4f %.4f\n", "geln", mean_of(geln_auc), std_of(geln_auc));
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"GELN: two-modality multi-label classification combining a fusion model with a "
               "correlation-matrix GCN via validation-searched weighted averaging"};
  app.require_subcommand(1);

  CommonOpts opt;
  SynthConfig synth_cfg;
  std::string model_dir;
  int repeats = 1;

  const auto add_common = [&](CLI::App* cmd, bool needs_manifest, bool takes_config = true) {
    if (needs_manifest)
      cmd->add_option("--manifest", opt.manifest, "Input dataset manifest (JSON)")
          ->required();
    cmd->add_option("--out", opt.out, "Output directory for all artifacts")->required();
    if (takes_config)
      cmd->add_option("--config", opt.config_path, "Structured text config file (key = value)");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic manifest (SPC schema)");
  add_common(synth, false);
  synth->add_option("--seed", opt.seed, "Generator seed")->capture_default_str();
  synth->add_option("--n-train", synth_cfg.n_train, "Training cases")->capture_default_str();
  synth->add_option("--n-val", synth_cfg.n_val, "Validation cases")->capture_default_str();
  synth->add_option("--n-test", synth_cfg.n_test, "Test cases")->capture_default_str();
  synth->add_option("--correlation-strength", synth_cfg.correlation_strength,
                    "Label pair coupling in [0, 1]")
      ->capture_default_str();
  synth->add_option("--noise-scale", synth_cfg.noise_scale, "Feature noise scale")
      ->capture_default_str();
  synth->add_option("--clinical-dim", synth_cfg.feature_dims.clinical, "Clinical feature width")
      ->capture_default_str();
  synth
      ->add_option("--dermoscopy-dim", synth_cfg.feature_dims.dermoscopy,
                   "Dermoscopy feature width")
      ->capture_default_str();

  auto* cm = app.add_subcommand("cm", "Build the correlation matrix CSV from a manifest");
  add_common(cm, true);
  auto* cm_mode_opt =
      cm->add_option("--cm-mode", opt.cm_mode, "raw or row-stochastic")->capture_default_str();

  const auto add_train_flags = [&](CLI::App* cmd) {
    cmd->add_option("--seed", opt.seed, "Training seed")->capture_default_str();
    cmd->add_option("--preset", opt.preset, "desk or paper")->capture_default_str();
    cmd->add_option("--variant", opt.variant, "freeze or unfreeze")->capture_default_str();
    cmd->add_option("--cm-mode", opt.cm_mode, "raw or row-stochastic")->capture_default_str();
    cmd->add_option("--grid-step", opt.grid_step, "Ensemble weight grid resolution")
        ->capture_default_str();
  };

  auto* train = app.add_subcommand("train", "Run training stages 1-2, write checkpoints + logs");
  add_common(train, true);
  add_train_flags(train);

  // eval takes its settings from the saved run_config.json, not a config file
  auto* eval = app.add_subcommand("eval", "Evaluate trained checkpoints on a manifest");
  add_common(eval, true, false);
  eval->add_option("--model-dir", model_dir, "Directory with run_config.json and checkpoints")
      ->required();
  eval->add_option("--grid-step", opt.grid_step, "Ensemble weight grid resolution")
      ->capture_default_str();

  auto* pipeline =
      app.add_subcommand("pipeline", "Full run: train, search weights, emit the three reports");
  add_common(pipeline, true);
  add_train_flags(pipeline);

  auto* repeat = app.add_subcommand("repeat", "Run R seeded pipelines and aggregate mean +- std");
  add_common(repeat, true);
  add_train_flags(repeat);
  repeat->add_option("--repeats", repeats, "Number of seeded runs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help/version succeed; parse problems are validation errors
  }

  try {
    // record which flags were given so they can override the config file
    CLI::App* active = nullptr;
    for (auto* c : {synth, cm, train, eval, pipeline, repeat}) {
      if (c->parsed()) active = c;
    }
    if (active == nullptr) {
      std::cerr << "no subcommand selected\n";
      return 1;
    }
    const auto flag_given = [](CLI::App* cmd, const std::string& name) {
      const auto* o = cmd->get_option_no_throw(name);
      return o != nullptr && o->count() > 0;
    };
    opt.seed_set = flag_given(active, "--seed");
    opt.preset_set = flag_given(active, "--preset");
    opt.variant_set = flag_given(active, "--variant");
    opt.grid_step_set = flag_given(active, "--grid-step");
    opt.cm_mode_set = (active == cm) ? cm_mode_opt->count() > 0 : flag_given(active, "--cm-mode");

    if (synth->parsed()) {
      SynthFlagSet given;
      given.n_train = flag_given(synth, "--n-train");
      given.n_val = flag_given(synth, "--n-val");
      given.n_test = flag_given(synth, "--n-test");
      given.corr = flag_given(synth, "--correlation-strength");
      given.noise = flag_given(synth, "--noise-scale");
      given.clin = flag_given(synth, "--clinical-dim");
      given.derm = flag_given(synth, "--dermoscopy-dim");
      return cmd_synth(opt, synth_cfg, given);
    }
    if (cm->parsed()) return cmd_cm(opt);
    if (train->parsed()) return cmd_train(opt);
    if (eval->parsed()) return cmd_eval(opt, model_dir);
    if (pipeline->parsed()) return cmd_pipeline(opt);
    return cmd_repeat(opt, repeats);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace geln::cli

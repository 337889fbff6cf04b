#include "geln/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "geln/errors.hpp"
#include "geln/nn.hpp"
#include "geln/predictions.hpp"

namespace geln {

std::string to_string(Variant v) { return v == Variant::freeze ? "freeze" : "unfreeze"; }

Variant variant_from_string(const std::string& s) {
  if (s == "freeze") return Variant::freeze;
  if (s == "unfreeze") return Variant::unfreeze;
  throw ValidationError("unknown variant '" + s + "'");
}

TrainConfig TrainConfig::desk() { return TrainConfig{}; }

TrainConfig TrainConfig::paper_scale() {
  TrainConfig cfg;
  cfg.epochs = 250;
  cfg.base_lr = 3e-5;
  cfg.swa_last_epochs = 50;
  return cfg;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("config: epochs must be >= 1");
  if (batch_size < 2) throw ValidationError("config: batch_size must be >= 2");
  if (base_lr <= 0.0) throw ValidationError("config: base_lr must be > 0");
  if (min_lr < 0.0) throw ValidationError("config: min_lr must be >= 0");
  if (swa_last_epochs < 0 || swa_last_epochs > epochs)
    throw ValidationError("config: swa_last_epochs must be in [0, epochs]");
  if (grid_step <= 0.0 || grid_step > 1.0)
    throw ValidationError("config: grid_step must be in (0, 1]");
  if (dims.feature_dim < 1 || dims.encoder_hidden < 1 || dims.embed_dim < 1 ||
      dims.gcn_hidden < 1 || dims.trunk_hidden < 1)
    throw ValidationError("config: model dims must be positive");
}

void SWAState::accumulate(const ParamList& params) {
  std::size_t k = 0;
  for (const auto& p : params) {
    if (!p.trainable()) continue;
    if (snapshots == 0) {
      if (k >= mean.size()) mean.emplace_back();
      mean[k] = *p.value;
    } else {
      auto& mk = mean[k];
      if (mk.size() != p.value->size()) throw ValidationError("swa: parameter size changed");
      const double inv = 1.0 / static_cast<double>(snapshots + 1);
      for (std::size_t i = 0; i < mk.size(); ++i) mk[i] += ((*p.value)[i] - mk[i]) * inv;
    }
    ++k;
  }
  ++snapshots;
}

void SWAState::apply(const ParamList& params) const {
  if (snapshots == 0) throw ValidationError("swa: no snapshots to apply");
  std::size_t k = 0;
  for (const auto& p : params) {
    if (!p.trainable()) continue;
    if (k >= mean.size() || mean[k].size() != p.value->size())
      throw ValidationError("swa: state does not match parameter list");
    *p.value = mean[k];
    ++k;
  }
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   Rng* rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  if (rng) rng->shuffle(perm);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, n);
    batches.emplace_back(perm.begin() + begin, perm.begin() + end);
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

FusionConfig fusion_config_for(const TrainConfig& cfg, const Dataset& ds) {
  FusionConfig fc;
  fc.clinical_dim = ds.feature_dims().clinical;
  fc.dermoscopy_dim = ds.feature_dims().dermoscopy;
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

void check_finite_loss(double loss) {
  if (!std::isfinite(loss)) throw ValidationError("training diverged (non-finite loss)");
}

}  // namespace

FusionStageResult train_fusion_stage(const Dataset& train, const TrainConfig& cfg,
                                     const EpochHook& hook) {
  cfg.validate();
  if (train.size() < 2) throw ValidationError("train_fusion_stage: need at least 2 cases");

  FusionModel model(fusion_config_for(cfg, train), train.schema().layout(),
                    derive_seed(cfg.seed, "stage1.fusion"));
  ParamList params = model.params();
  AdamState adam;
  adam.init(params);
  const CosineSchedule sched{cfg.base_lr, cfg.epochs, cfg.min_lr};
  Rng shuffle_rng(derive_seed(cfg.seed, "stage1.shuffle"));
  SWAState swa;
  TrainLog log;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double t0 = now_ms();
    const double lr = sched.lr(epoch);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (const auto& batch : make_batches(train.size(), cfg.batch_size, &shuffle_rng)) {
      const Matrix clin = features_matrix(train, batch, Modality::clinical);
      const Matrix derm = features_matrix(train, batch, Modality::dermoscopy);
      const Matrix targets = targets_matrix(train, batch);
      const auto acts = model.forward(clin, derm);
      model.zero_grad();
      const double loss = model.loss_backward(acts, targets);
      check_finite_loss(loss);
      adam_step(params, adam, lr);
      loss_sum += loss;
      ++n_batches;
    }
    if (epoch >= cfg.epochs - cfg.swa_last_epochs) swa.accumulate(params);
    log.push_back({epoch, lr, loss_sum / static_cast<double>(n_batches), now_ms() - t0});
    if (hook) hook(epoch, params);
  }
  if (swa.snapshots > 0) swa.apply(params);
  // no batch-norm layers in the fusion model, so SWA finalize ends here
  return {std::move(model), std::move(log)};
}

GraphStageResult train_graph_stage(const Dataset& train, const Matrix& cm,
                                   const FusionModel& stage1, const TrainConfig& cfg,
                                   const EpochHook& hook) {
  cfg.validate();
  if (train.size() < 2) throw ValidationError("train_graph_stage: need at least 2 cases");
  if (cm.rows() != train.schema().total_classes())
    throw ValidationError("train_graph_stage: CM size does not match schema");

  GraphStageResult result{
      GraphModel(graph_config_for(cfg), train.schema(), derive_seed(cfg.seed, "stage2.graph")),
      std::nullopt,
      {}};
  if (!cfg.dims.embedding_csv.empty()) {
    result.graph.set_label_embedding(
        load_label_embedding_csv(cfg.dims.embedding_csv, train.schema()));
  }
  if (cfg.variant == Variant::unfreeze) {
    result.live_fusion.emplace(fusion_config_for(cfg, train), train.schema().layout(),
                               derive_seed(cfg.seed, "stage2.fusion"));
  }
  const FusionModel& encoders = result.live_fusion ? *result.live_fusion : stage1;

  ParamList params = result.graph.params();
  if (result.live_fusion) {
    for (auto& p : result.live_fusion->params()) params.push_back(p);
  }
  AdamState adam;
  adam.init(params);
  const CosineSchedule sched{cfg.base_lr, cfg.epochs, cfg.min_lr};
  Rng shuffle_rng(derive_seed(cfg.seed, "stage2.shuffle"));
  SWAState swa;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double t0 = now_ms();
    const double lr = sched.lr(epoch);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (const auto& batch : make_batches(train.size(), cfg.batch_size, &shuffle_rng)) {
      const Matrix clin = features_matrix(train, batch, Modality::clinical);
      const Matrix derm = features_matrix(train, batch, Modality::dermoscopy);
      const Matrix targets = targets_matrix(train, batch);
      const auto enc_acts = encoders.forward(clin, derm);
      auto acts = result.graph.forward(cm, enc_acts.f_c, enc_acts.f_d, enc_acts.f_f, Mode::train);
      result.graph.zero_grad();
      if (result.live_fusion) result.live_fusion->zero_grad();
      const auto back = result.graph.loss_backward(acts, cm, targets);
      check_finite_loss(back.loss);
      if (result.live_fusion) {
        result.live_fusion->encoder_backward(enc_acts, back.d_clinical, back.d_dermoscopy,
                                             back.d_fused);
      }
      adam_step(params, adam, lr);
      loss_sum += back.loss;
      ++n_batches;
    }
    if (epoch >= cfg.epochs - cfg.swa_last_epochs) swa.accumulate(params);
    result.log.push_back({epoch, lr, loss_sum / static_cast<double>(n_batches), now_ms() - t0});
    if (hook) hook(epoch, params);
  }
  if (swa.snapshots > 0) {
    swa.apply(params);
    reestimate_bn_stats(result.graph, encoders, cm, train, cfg.batch_size);
  }
  return result;
}

void reestimate_bn_stats(GraphModel& graph, const FusionModel& encoders, const Matrix& cm,
                         const Dataset& train, int batch_size) {
  graph.begin_bn_reestimate();
  for (const auto& batch : make_batches(train.size(), static_cast<std::size_t>(batch_size),
                                        nullptr)) {
    const Matrix clin = features_matrix(train, batch, Modality::clinical);
    const Matrix derm = features_matrix(train, batch, Modality::dermoscopy);
    const auto enc_acts = encoders.forward(clin, derm);
    graph.forward(cm, enc_acts.f_c, enc_acts.f_d, enc_acts.f_f, Mode::train);
  }
  graph.end_bn_reestimate();
}

EnsembleWeights uniform_weights(std::vector<std::string> sources, double step) {
  EnsembleWeights w;
  w.sources = std::move(sources);
  w.weights.assign(w.sources.size(), 1.0 / static_cast<double>(w.sources.size()));
  w.step = step;
  w.objective = 0.0;  // no validation set to measure against
  return w;
}

PipelineResult run_pipeline(const Dataset& full, const TrainConfig& cfg) {
  cfg.validate();
  auto parts = split(full);
  if (parts.train.empty()) throw ValidationError("run_pipeline: empty train split");
  if (parts.test.empty()) throw ValidationError("run_pipeline: empty test split");

  auto cm = build_conditional_matrix(count_cooccurrence(full));
  if (cfg.cm_mode == CmMode::row_stochastic) cm = normalize_matrix(cm, CmMode::row_stochastic);

  auto stage1 = train_fusion_stage(parts.train, cfg);
  auto stage2 = train_graph_stage(parts.train, cm.cm, stage1.model, cfg);
  const FusionModel& graph_enc = stage2.live_fusion ? *stage2.live_fusion : stage1.model;

  const CategoryLayout layout = full.schema().layout();
  EnsembleWeights w_fusion, w_graph, w_total;
  if (!parts.val.empty()) {
    const Matrix val_targets = targets_matrix(parts.val);
    const auto fp = predict_fusion(stage1.model, parts.val);
    w_fusion = search_weights({&fp.p_fc, &fp.p_fd, &fp.p_ff}, val_targets, layout, cfg.grid_step);
    auto gp = predict_graph(stage2.graph, graph_enc, cm.cm, parts.val);
    w_graph = search_weights({&gp.p_gc, &gp.p_gd, &gp.p_gf}, val_targets, layout, cfg.grid_step);
    const PredictionSet pf_val =
        combine({&fp.p_fc, &fp.p_fd, &fp.p_ff}, w_fusion.weights, PredictionSource::p_f);
    const PredictionSet pg_val =
        combine({&gp.p_gc, &gp.p_gd, &gp.p_gf}, w_graph.weights, PredictionSource::p_g);
    w_total = search_weights({&pf_val, &pg_val}, val_targets, layout, cfg.grid_step);
  } else {
    // mean-average fallback: W_pf = W_pg = 0.5, uniform branch weights
    w_fusion = uniform_weights({"P_FC", "P_FD", "P_FF"}, cfg.grid_step);
    w_graph = uniform_weights({"P_GC", "P_GD", "P_GF"}, cfg.grid_step);
    w_total = uniform_weights({"P_F", "P_G"}, cfg.grid_step);
  }
  stage1.model.set_branch_weights(w_fusion.weights);
  stage2.graph.set_branch_weights(w_graph.weights);

  const Matrix test_targets = targets_matrix(parts.test);
  const auto fp_test = predict_fusion(stage1.model, parts.test);
  const PredictionSet p_f =
      combine({&fp_test.p_fc, &fp_test.p_fd, &fp_test.p_ff}, w_fusion.weights,
              PredictionSource::p_f);
  auto gp_test = predict_graph(stage2.graph, graph_enc, cm.cm, parts.test);
  const PredictionSet p_g = combine({&gp_test.p_gc, &gp_test.p_gd, &gp_test.p_gf},
                                    w_graph.weights, PredictionSource::p_g);
  const PredictionSet p_total = combine({&p_f, &p_g}, w_total.weights, PredictionSource::p_total);

  PipelineResult result{std::move(stage1.model),
                        std::move(stage2.graph),
                        std::move(stage2.live_fusion),
                        std::move(cm),
                        w_fusion,
                        w_graph,
                        w_total,
                        build_report(p_f, test_targets, full.schema(), w_fusion),
                        build_report(p_g, test_targets, full.schema(), w_graph),
                        build_report(p_total, test_targets, full.schema(), w_total),
                        std::move(stage1.log),
                        std::move(stage2.log)};
  return result;
}

}  // namespace geln

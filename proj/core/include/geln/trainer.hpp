#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "geln/cooccur.hpp"
#include "geln/dataset.hpp"
#include "geln/ensemble.hpp"
#include "geln/fusion.hpp"
#include "geln/graph.hpp"
#include "geln/metrics.hpp"
#include "geln/params.hpp"
#include "geln/rng.hpp"

namespace geln {

enum class Variant { freeze, unfreeze };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct ModelDims {
  std::size_t encoder_hidden = 128;
  std::size_t feature_dim = 64;
  std::size_t embed_dim = 32;
  std::size_t gcn_hidden = 64;
  std::size_t trunk_hidden = 64;
  bool train_embedding = false;
  std::string embedding_csv;  // optional user-supplied label embedding
};

struct TrainConfig {
  int epochs = 60;
  int batch_size = 32;
  double base_lr = 3e-4;
  double min_lr = 0.0;
  int swa_last_epochs = 10;
  Variant variant = Variant::freeze;
  std::uint64_t seed = 0;
  CmMode cm_mode = CmMode::raw_conditional;
  double grid_step = 0.05;
  ModelDims dims;

  /// Desk-scale defaults (the values above).
  static TrainConfig desk();
  /// 250 epochs, lr 3e-5, SWA over the last 50 epochs.
  static TrainConfig paper_scale();

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double wall_ms = 0.0;
};
using TrainLog = std::vector<EpochRecord>;

/// Running mean of trainable parameter snapshots.
struct SWAState {
  std::int64_t snapshots = 0;
  std::vector<std::vector<double>> mean;

  void accumulate(const ParamList& params);
  /// Writes the snapshot mean into the parameters; throws with zero snapshots.
  void apply(const ParamList& params) const;
};

/// Observation hook, called at the end of every epoch with the stage's
/// parameter list (post-update).
using EpochHook = std::function<void(int epoch, const ParamList& params)>;

/// Shuffled index batches; a trailing batch of size 1 is merged into the
/// previous one so batch normalization always sees at least 2 rows. Pass a
/// null rng for unshuffled consecutive batches.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   Rng* rng);

struct FusionStageResult {
  FusionModel model;
  TrainLog log;
};

/// Stage 1: minimize L_F over shuffled mini-batches with cosine-annealed
/// Adam; SWA over the last swa_last_epochs epochs.
FusionStageResult train_fusion_stage(const Dataset& train, const TrainConfig& cfg,
                                     const EpochHook& hook = nullptr);

struct GraphStageResult {
  GraphModel graph;
  /// unfreeze only: the fresh fusion model trained jointly under L_G.
  std::optional<FusionModel> live_fusion;
  TrainLog log;
};

/// Stage 2: minimize L_G. freeze: image features come from `stage1`, which
/// stays bit-identical. unfreeze: a freshly initialized fusion model supplies
/// the features and trains jointly; `stage1` is still left untouched.
GraphStageResult train_graph_stage(const Dataset& train, const Matrix& cm,
                                   const FusionModel& stage1, const TrainConfig& cfg,
                                   const EpochHook& hook = nullptr);

/// One training-mode pass over the train data that recomputes the graph
/// model's batch-norm running statistics without touching any weight.
void reestimate_bn_stats(GraphModel& graph, const FusionModel& encoders, const Matrix& cm,
                         const Dataset& train, int batch_size);

EnsembleWeights uniform_weights(std::vector<std::string> sources, double step);

struct PipelineResult {
  FusionModel fusion;  // stage-1 model with searched branch weights applied
  GraphModel graph;
  std::optional<FusionModel> live_fusion;
  CorrelationMatrix cm;
  EnsembleWeights fusion_weights;  // over P_FC, P_FD, P_FF
  EnsembleWeights graph_weights;   // over P_GC, P_GD, P_GF
  EnsembleWeights total_weights;   // over P_F, P_G
  MetricsReport report_fusion, report_graph, report_geln;
  TrainLog fusion_log, graph_log;
};

/// Full three-step run: stage 1, stage 2, validation weight search (uniform
/// fallback when the val split is empty), and the three test-split reports.
PipelineResult run_pipeline(const Dataset& full, const TrainConfig& cfg);

}  // namespace geln

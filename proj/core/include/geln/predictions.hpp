#pragma once

#include <string>
#include <vector>

#include "geln/dataset.hpp"
#include "geln/fusion.hpp"
#include "geln/graph.hpp"
#include "geln/matrix.hpp"

namespace geln {

enum class PredictionSource {
  p_fc,
  p_fd,
  p_ff,
  p_f,
  p_gc,
  p_gd,
  p_gf,
  p_g,
  p_total,
};

std::string to_string(PredictionSource s);

/// Per-case probability rows over the flattened class space; each category
/// block is a distribution.
struct PredictionSet {
  PredictionSource source = PredictionSource::p_total;
  std::vector<std::string> case_ids;
  Matrix probs;  // n x C

  std::size_t size() const { return case_ids.size(); }
};

struct FusionPredictions {
  PredictionSet p_fc, p_fd, p_ff;
};

struct GraphPredictions {
  PredictionSet p_gc, p_gd, p_gf;
};

/// Eval-mode inference over every case of `ds`, in case order.
FusionPredictions predict_fusion(const FusionModel& model, const Dataset& ds,
                                 std::size_t batch_size = 64);

/// Branch image features come from `encoders` (the stage-1 model in the
/// freeze variant, the jointly trained one in unfreeze).
GraphPredictions predict_graph(GraphModel& model, const FusionModel& encoders, const Matrix& cm,
                               const Dataset& ds, std::size_t batch_size = 64);

}  // namespace geln

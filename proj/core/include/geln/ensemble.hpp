#pragma once

#include <span>
#include <vector>

#include "geln/matrix.hpp"
#include "geln/metrics.hpp"
#include "geln/predictions.hpp"
#include "geln/schema.hpp"

namespace geln {

/// Elementwise weighted sum of prediction sets. All sets must cover the same
/// cases in the same order; weights must be nonnegative with positive sum.
/// With weights on the simplex the output blocks remain distributions.
PredictionSet combine(const std::vector<const PredictionSet*>& preds,
                      std::span<const double> weights, PredictionSource out_source);

/// Mean one-vs-rest AUC over all classes; zero-support classes contribute 0.
double mean_auc_objective(const Matrix& probs, const Matrix& targets);

/// Candidate weight vectors at grid resolution `step`: the uniform point
/// first, then every simplex lattice point in descending lexicographic
/// order. Keeping the first maximum of a linear scan therefore breaks ties
/// toward uniform, then toward larger weight on the first source.
std::vector<std::vector<double>> weight_grid(std::size_t k, double step);

/// Exhaustive search over the weight grid for the combination maximizing
/// mean validation AUC. k must be 2 or 3; the validation set must be
/// nonempty (callers fall back to uniform weights when it is).
EnsembleWeights search_weights(const std::vector<const PredictionSet*>& preds,
                               const Matrix& val_targets, const CategoryLayout& layout,
                               double step = 0.05);

}  // namespace geln

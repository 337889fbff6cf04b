#include "geln/ensemble.hpp"

#include <cmath>

#include "geln/errors.hpp"

namespace geln {

PredictionSet combine(const std::vector<const PredictionSet*>& preds,
                      std::span<const double> weights, PredictionSource out_source) {
  if (preds.empty()) throw ValidationError("combine: no prediction sets");
  if (preds.size() != weights.size())
    throw ValidationError("combine: weight count does not match prediction sets");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ValidationError("combine: weights must be nonnegative");
    sum += w;
  }
  if (sum <= 0.0) throw ValidationError("combine: weights must have positive sum");

  const PredictionSet& first = *preds[0];
  for (const auto* p : preds) {
    if (p->case_ids != first.case_ids)
      throw ValidationError("combine: prediction sets cover different cases");
    if (p->probs.rows() != first.probs.rows() || p->probs.cols() != first.probs.cols())
      throw ValidationError("combine: prediction sets have different shapes");
  }

  PredictionSet out;
  out.source = out_source;
  out.case_ids = first.case_ids;
  out.probs = Matrix(first.probs.rows(), first.probs.cols());
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const auto& src = preds[k]->probs.data();
    auto& dst = out.probs.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += weights[k] * src[i];
  }
  return out;
}

double mean_auc_objective(const Matrix& probs, const Matrix& targets) {
  if (probs.rows() != targets.rows() || probs.cols() != targets.cols())
    throw ValidationError("mean_auc_objective: shape mismatch");
  const std::size_t c_total = probs.cols();
  std::vector<double> scores(probs.rows()), labels(probs.rows());
  double sum = 0.0;
  for (std::size_t g = 0; g < c_total; ++g) {
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      scores[i] = probs(i, g);
      labels[i] = targets(i, g);
    }
    sum += auc_ovr(scores, labels);
  }
  return sum / static_cast<double>(c_total);
}

std::vector<std::vector<double>> weight_grid(std::size_t k, double step) {
  if (step <= 0.0 || step > 1.0) throw ValidationError("weight_grid: step must be in (0, 1]");
  const long m = std::lround(1.0 / step);
  if (std::abs(static_cast<double>(m) * step - 1.0) > 1e-9)
    throw ValidationError("weight_grid: step must divide 1");

  std::vector<std::vector<double>> grid;
  grid.emplace_back(k, 1.0 / static_cast<double>(k));  // uniform point always present

  if (k == 2) {
    for (long i = m; i >= 0; --i)
      grid.push_back({static_cast<double>(i) * step, static_cast<double>(m - i) * step});
  } else if (k == 3) {
    for (long i = m; i >= 0; --i)
      for (long j = m - i; j >= 0; --j)
        grid.push_back({static_cast<double>(i) * step, static_cast<double>(j) * step,
                        static_cast<double>(m - i - j) * step});
  } else {
    throw ValidationError("weight_grid: only 2 or 3 sources supported");
  }
  return grid;
}

EnsembleWeights search_weights(const std::vector<const PredictionSet*>& preds,
                               const Matrix& val_targets, const CategoryLayout& layout,
                               double step) {
  const std::size_t k = preds.size();
  if (k != 2 && k != 3) throw ValidationError("search_weights: need 2 or 3 prediction sets");
  for (const auto* p : preds) {
    if (p->probs.rows() == 0) throw ValidationError("search_weights: empty validation set");
  }
  if (val_targets.rows() != preds[0]->probs.rows() || val_targets.cols() != layout.total)
    throw ValidationError("search_weights: targets shape mismatch");

  const auto grid = weight_grid(k, step);
  EnsembleWeights best;
  best.step = step;
  for (const auto* p : preds) best.sources.push_back(to_string(p->source));

  double best_obj = -1.0;
  for (const auto& w : grid) {
    const PredictionSet mixed = combine(preds, w, PredictionSource::p_total);
    const double obj = mean_auc_objective(mixed.probs, val_targets);
    if (obj > best_obj) {
      best_obj = obj;
      best.weights = w;
    }
  }
  best.objective = best_obj;
  return best;
}

}  // namespace geln

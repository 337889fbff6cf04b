#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "geln/matrix.hpp"
#include "geln/predictions.hpp"
#include "geln/schema.hpp"

namespace geln {

/// One-vs-rest ROC AUC via the Mann-Whitney statistic with 0.5 credit per
/// tied pair. Returns 0 when either class has no support.
double auc_ovr(std::span<const double> scores, std::span<const double> labels);

struct ClassMetrics {
  double auc = 0.0;
  double precision = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  std::int64_t support = 0;

  bool operator==(const ClassMetrics&) const = default;
};

struct EnsembleWeights {
  std::vector<std::string> sources;
  std::vector<double> weights;
  double step = 0.05;
  double objective = 0.0;  // mean AUC achieved on validation

  bool operator==(const EnsembleWeights&) const = default;
};

/// Hard labels per case and category: within-category argmax, ties resolved
/// to the lowest index. Result is B x N class indices (within-category).
std::vector<std::vector<std::size_t>> hard_labels(const Matrix& probs,
                                                  const CategoryLayout& layout);

/// Per-class precision / sensitivity / specificity / support from hard
/// labels, one-vs-rest within each class's own category. Zero denominators
/// yield 0. AUC fields are left at 0 (build_report fills them).
std::vector<ClassMetrics> class_metrics(const Matrix& probs, const Matrix& targets,
                                        const CategoryLayout& layout);

struct MetricsReport {
  std::string source;
  std::int64_t n_cases = 0;
  std::vector<std::pair<std::string, ClassMetrics>> per_class;  // schema order
  std::vector<std::pair<std::string, double>> per_category_mean_auc;
  double overall_mean_auc = 0.0;  // mean over all C classes
  double listed_mean_auc = 0.0;   // excludes classes named "ABS"
  std::optional<EnsembleWeights> ensemble_weights;

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
  /// Flat CSV, one row per class.
  std::string to_csv() const;

  bool operator==(const MetricsReport&) const = default;
};

/// Assemble the full report. All metric values are rounded to 6 decimal
/// places here, so the JSON form round-trips losslessly.
MetricsReport build_report(const PredictionSet& preds, const Matrix& targets,
                           const LabelSchema& schema,
                           std::optional<EnsembleWeights> weights = std::nullopt);

}  // namespace geln

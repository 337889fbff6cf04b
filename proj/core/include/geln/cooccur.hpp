#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geln/dataset.hpp"
#include "geln/matrix.hpp"
#include "geln/schema.hpp"

namespace geln {

enum class CmMode { raw_conditional, row_stochastic };

std::string to_string(CmMode m);
CmMode cm_mode_from_string(const std::string& s);

/// Symmetric label pair counts. count(i, j) is the number of cases carrying
/// both global labels i and j; the diagonal count(i, i) is the number of
/// cases carrying label i.
struct CooccurrenceCounts {
  std::size_t num_classes = 0;
  std::int64_t n_cases = 0;
  std::vector<std::int64_t> m;  // row-major num_classes x num_classes

  std::int64_t count(std::size_t i, std::size_t j) const { return m[i * num_classes + j]; }
  std::int64_t& count(std::size_t i, std::size_t j) { return m[i * num_classes + j]; }
};

/// CxC matrix of conditional probabilities p(L_j | L_i) = M_ij / M_i.
/// Rows of zero-occurrence classes are all zero, diagonal included.
struct CorrelationMatrix {
  Matrix cm;
  CmMode mode = CmMode::raw_conditional;
  CooccurrenceCounts source_counts;
};

/// Count label occurrences and co-occurrences over the train and val cases
/// of the given dataset (test cases are excluded). Throws ValidationError if
/// no such case exists.
CooccurrenceCounts count_cooccurrence(const Dataset& train_and_val);

CorrelationMatrix build_conditional_matrix(const CooccurrenceCounts& counts);

/// row_stochastic: divide every row with positive sum by that sum.
/// raw_conditional: identity copy.
CorrelationMatrix normalize_matrix(const CorrelationMatrix& cm, CmMode mode);

/// CSV with a header row and a leading column of "category/class" keys;
/// values carry 17 significant digits so doubles round-trip exactly.
void save_cm_csv(const CorrelationMatrix& cm, const LabelSchema& schema, const std::string& path);
CorrelationMatrix load_cm_csv(const std::string& path, const LabelSchema& schema);

}  // namespace geln

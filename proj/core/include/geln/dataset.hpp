#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "geln/matrix.hpp"
#include "geln/schema.hpp"

namespace geln {

enum class Split { train, val, test };
enum class Modality { clinical, dermoscopy };

std::string to_string(Split s);
std::string to_string(Modality m);
Split split_from_string(const std::string& s);

struct FeatureDims {
  std::size_t clinical = 0;
  std::size_t dermoscopy = 0;

  std::size_t of(Modality m) const { return m == Modality::clinical ? clinical : dermoscopy; }
  bool operator==(const FeatureDims&) const = default;
};

struct Case {
  std::string id;
  Split split = Split::train;
  std::vector<double> clinical;
  std::vector<double> dermoscopy;
  std::map<std::string, std::string> labels;  // category name -> class name

  const std::vector<double>& features(Modality m) const {
    return m == Modality::clinical ? clinical : dermoscopy;
  }
  bool operator==(const Case&) const = default;
};

/// Immutable collection of validated cases sharing one schema and fixed
/// per-modality feature dimensions.
class Dataset {
 public:
  Dataset() = default;
  Dataset(LabelSchema schema, FeatureDims dims, std::vector<Case> cases);

  const LabelSchema& schema() const { return schema_; }
  const FeatureDims& feature_dims() const { return dims_; }
  const std::vector<Case>& cases() const { return cases_; }
  std::size_t size() const { return cases_.size(); }
  bool empty() const { return cases_.empty(); }

  bool operator==(const Dataset&) const = default;

 private:
  LabelSchema schema_;
  FeatureDims dims_;
  std::vector<Case> cases_;
};

struct SplitDatasets {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Synthetic dataset recipe. Labels of consecutive category pairs (0,1),
/// (2,3), ... are coupled: with probability correlation_strength the second
/// label of a pair is forced to the first label's class index modulo its own
/// class count, otherwise drawn uniformly. Feature vectors are sums of
/// class-conditional patterns plus Gaussian noise; the clinical modality
/// carries the patterns of categories with index % 3 != 2 and dermoscopy
/// those with index % 3 != 0, so the modalities overlap but neither sees
/// everything.
struct SynthConfig {
  LabelSchema schema;
  std::size_t n_train = 600;
  std::size_t n_val = 200;
  std::size_t n_test = 200;
  FeatureDims feature_dims{64, 64};
  double correlation_strength = 0.5;  // in [0, 1]
  double noise_scale = 1.0;           // >= 0
  std::uint64_t seed = 0;
};

/// Parse and validate a JSON manifest. Throws IoError if the file cannot be
/// read, ValidationError (naming the case id and field path) on any content
/// problem.
Dataset load_manifest(const std::string& path);
void save_manifest(const Dataset& ds, const std::string& path);

/// Manifest body as JSON text (same format as the file).
std::string dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const std::string& text);

/// Schema alone, as the JSON array used inside manifests.
std::string schema_to_json_text(const LabelSchema& schema);
LabelSchema schema_from_json_text(const std::string& text);

/// One-hot vector of length C with exactly one 1 inside each category block.
std::vector<double> flatten_labels(const Case& c, const LabelSchema& schema);

/// Deterministic function of the config: same config, byte-identical dataset.
Dataset synth_generate(const SynthConfig& cfg);

/// Partition by split tag; all three share the input's schema and dims.
SplitDatasets split(const Dataset& ds);

/// Batch assembly helpers. `idx` selects cases by position.
Matrix targets_matrix(const Dataset& ds, std::span<const std::size_t> idx);
Matrix features_matrix(const Dataset& ds, std::span<const std::size_t> idx, Modality m);
Matrix targets_matrix(const Dataset& ds);
Matrix features_matrix(const Dataset& ds, Modality m);

}  // namespace geln

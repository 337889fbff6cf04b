#pragma once

#include <map>
#include <string>

#include "geln/dataset.hpp"
#include "geln/trainer.hpp"

namespace geln::cli {

/// Structured text config: `key = value` lines grouped in `[section]`
/// headers, one section per module. Unknown sections or keys are rejected.
/// Blank lines and lines starting with '#' or ';' are ignored.
///
/// Sections and keys:
///   [dataset]   n_train, n_val, n_test, correlation_strength, noise_scale,
///               clinical_dim, dermoscopy_dim
///   [cooccur]   cm_mode
///   [models]    encoder_hidden, feature_dim, embed_dim, gcn_hidden,
///               trunk_hidden, train_embedding
///   [trainer]   epochs, batch_size, base_lr, min_lr, swa_last_epochs,
///               variant, preset
///   [ensemble]  grid_step
class CliConfig {
 public:
  CliConfig() = default;

  /// Parse a config file; throws IoError / ValidationError.
  static CliConfig load(const std::string& path);
  static CliConfig parse(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;

  /// Fold config-file values into the defaults. Command-line flags are
  /// applied by the caller afterwards, so they win over the file.
  void apply_to(TrainConfig& cfg) const;
  void apply_to(SynthConfig& cfg) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace geln::cli

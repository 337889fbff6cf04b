#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace geln {

/// Named view into one parameter tensor of a model. `grad` is null for
/// non-trainable buffers (batch-norm running statistics, fixed embeddings,
/// branch weights); those are checkpointed but skipped by the optimizer and
/// by stochastic weight averaging.
struct ParamEntry {
  std::string path;
  std::vector<std::size_t> shape;
  std::vector<double>* value = nullptr;
  std::vector<double>* grad = nullptr;

  bool trainable() const { return grad != nullptr; }
};

using ParamList = std::vector<ParamEntry>;

std::size_t trainable_size(const ParamList& params);
std::size_t total_size(const ParamList& params);

/// Flatten / scatter trainable values; used by SWA and gradient checks.
std::vector<double> gather_trainable(const ParamList& params);
void scatter_trainable(const ParamList& params, const std::vector<double>& flat);
std::vector<double> gather_trainable_grads(const ParamList& params);

/// Prepend a prefix to every path (used when bundling several models into
/// one checkpoint).
ParamList with_prefix(const std::string& prefix, ParamList list);

}  // namespace geln

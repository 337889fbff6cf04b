#pragma once

#include <string>

#include "geln/params.hpp"

namespace geln {

/// Canonical binary checkpoint: path -> shape + little-endian 64-bit floats.
/// Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const ParamList& params);

/// Load into an already-built model; every path and shape must match.
void load_checkpoint(const std::string& path, const ParamList& params);

/// JSON form of the same mapping (round-trips doubles exactly via the
/// shortest-representation serializer).
std::string checkpoint_to_json(const ParamList& params);
void checkpoint_from_json(const std::string& text, const ParamList& params);

void save_checkpoint_json(const std::string& path, const ParamList& params);
void load_checkpoint_json(const std::string& path, const ParamList& params);

}  // namespace geln

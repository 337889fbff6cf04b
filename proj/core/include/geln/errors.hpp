#pragma once

#include <stdexcept>
#include <string>

namespace geln {

/// Invalid content: bad manifest fields, shape mismatches, bad config values.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem-level failure: missing, unreadable or unwritable file.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace geln

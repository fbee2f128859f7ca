#pragma once

#include <stdexcept>
#include <string>

namespace avs {

/// Malformed or inconsistent configuration (maps to CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A required input file or record is absent (maps to CLI exit code 3).
class MissingInputError : public std::runtime_error {
 public:
  explicit MissingInputError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Operation applied to an object in the wrong state, e.g. stepping a
/// finished episode.
class StateError : public std::logic_error {
 public:
  explicit StateError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace avs

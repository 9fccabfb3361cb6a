#pragma once

#include <stdexcept>
#include <string>

namespace mars {

// Bad inputs or precondition violations. The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed files or records.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown backends, missing adapters, bad config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mars

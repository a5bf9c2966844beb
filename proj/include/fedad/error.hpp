#pragma once

#include <stdexcept>
#include <string>

namespace fedad {

// Invalid shapes, hyperparameters or preconditions the caller controls.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files (missing columns, bad config syntax).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fedad

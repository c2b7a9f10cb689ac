#pragma once

#include <stdexcept>
#include <string>

namespace tlsr {

// Bad or unreadable input data (files, datasets, checkpoints).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A NaN/Inf surfaced in a loss, gradient or output.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Missing or contradictory command-line / configuration input.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tlsr

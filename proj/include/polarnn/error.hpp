// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace polarnn {

/// Bad argument value: out-of-range sizes, length mismatches, invalid ranges.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Network shapes that do not chain, or sub-decoders that cannot be embedded.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incomplete build configuration, e.g. a leaf with no sub-decoder supplied.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unparseable or inconsistent input files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Kernels that should agree do not.
class EquivalenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, long iteration, long batch_index)
      : std::runtime_error(what), iteration_(iteration), batch_index_(batch_index) {}

  long iteration() const noexcept { return iteration_; }
  long batch_index() const noexcept { return batch_index_; }

 private:
  long iteration_;
  long batch_index_;
};

}  // namespace polarnn

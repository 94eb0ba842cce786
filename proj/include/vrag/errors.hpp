// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace vrag {

// Malformed or inconsistent input data (dataset files, checkpoints, indices).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment configuration that fails schema validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vrag

#pragma once

#include <stdexcept>
#include <string>

namespace lsda {

// Shape/axis mismatch between tensors fed to an op.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated API precondition (non-scalar loss, missing gradient, bad ratio...).
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file contents (bad magic, truncation, checksum).
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where finite ones are required.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Test-oracle failure (e.g. non-deterministic function under grad_check).
struct OracleError : std::runtime_error {
  explicit OracleError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lsda

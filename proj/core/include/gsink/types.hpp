#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gsink {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using AgentId = std::uint32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Overflow, underflow or a degenerate state inside a numerical kernel.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

/// A configuration value failed validation. `field_path()` is the dotted path
/// of the offending key, e.g. "problem.epsilon".
class ConfigError : public Error {
 public:
  ConfigError(std::string field_path, const std::string& message)
      : Error(field_path.empty() ? message : field_path + ": " + message),
        field_path_(std::move(field_path)) {}

  const std::string& field_path() const noexcept { return field_path_; }

 private:
  std::string field_path_;
};

}  // namespace gsink

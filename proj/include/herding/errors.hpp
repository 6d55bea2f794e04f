#pragma once

#include <stdexcept>
#include <string>

namespace herding {

// Invalid or inconsistent user input (config files, flag values, malformed
// distributions or policies). CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical routine failed to reach its requested tolerance or horizon.
// CLI maps this to exit code 3.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// An operation was invoked outside the parameter regime it covers.
// CLI maps this to exit code 4.
class RegimeError : public std::runtime_error {
 public:
  explicit RegimeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace herding

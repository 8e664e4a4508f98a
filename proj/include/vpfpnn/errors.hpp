#pragma once

#include <stdexcept>
#include <string>

namespace vpfpnn {

// Bad shapes, domains, or file formats detected before any numerics run.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values produced during evaluation; carries the offending
// component/sample when known.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vpfpnn

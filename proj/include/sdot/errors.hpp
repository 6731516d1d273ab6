#pragma once

#include <stdexcept>
#include <string>

namespace sdot {

// Bad user-supplied configuration or input files. The CLI maps this to
// exit code 2; anything else thrown at runtime maps to exit code 3.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sdot

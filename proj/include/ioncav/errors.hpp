#pragma once

#include <stdexcept>
#include <string>

namespace ioncav {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct NonConvergenceError : std::runtime_error {
  explicit NonConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ioncav

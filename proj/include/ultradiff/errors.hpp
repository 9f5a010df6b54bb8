#pragma once

#include <stdexcept>
#include <string>

namespace ultradiff {

/// Bad input: malformed spec, config, address, or a precondition violation.
/// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A requested computation exceeds a hard size cap (dense matrix, enumeration).
class ScaleError : public std::runtime_error {
 public:
  explicit ScaleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ultradiff

#pragma once

#include <stdexcept>
#include <string>

namespace repvar {

enum class ErrorKind {
  Config,      // schema or value problem in a configuration
  Cfl,         // |u| dt / dx > 1
  Shape,       // array sizes or grids do not match
  Domain,      // point outside the space-time rectangle
  Degenerate,  // singular or non-positive-definite system
  Selection,   // a parameter search could not satisfy its criterion
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::string key = {})
      : std::runtime_error(what), kind_(kind), key_(std::move(key)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Offending config key or parameter name, empty when not applicable.
  const std::string& key() const noexcept { return key_; }

 private:
  ErrorKind kind_;
  std::string key_;
};

}  // namespace repvar

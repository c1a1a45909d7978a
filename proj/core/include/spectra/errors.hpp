#pragma once

#include <stdexcept>
#include <string>

namespace spectra {

enum class ErrorKind {
  Geometry,
  Parameter,
  Precondition,
  Contract,
  Solver,
  Labeling,
  Coverage,
  SmallDenominator,
  NoMatch,
  Resource,
  Config,
  Truncation,
  Domain,
  InsufficientSamples,
  Consistency,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace spectra

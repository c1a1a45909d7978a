#include "spectra/errors.hpp"

namespace spectra {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Geometry: return "geometry error";
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::Precondition: return "precondition error";
    case ErrorKind::Contract: return "contract error";
    case ErrorKind::Solver: return "solver error";
    case ErrorKind::Labeling: return "labeling error";
    case ErrorKind::Coverage: return "coverage error";
    case ErrorKind::SmallDenominator: return "small-denominator error";
    case ErrorKind::NoMatch: return "no-match error";
    case ErrorKind::Resource: return "resource error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Truncation: return "truncation error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::InsufficientSamples: return "insufficient-samples error";
    case ErrorKind::Consistency: return "internal consistency error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace spectra

#pragma once

#include <stdexcept>
#include <string>

namespace photon {

/// Runtime failure inside a simulation step (zero throughput, fully destructive
/// interference, clipped fields, ...). The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: scenario schema violations, unparsable files, bad flags.
/// The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace photon

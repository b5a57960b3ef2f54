#pragma once

#include <stdexcept>
#include <string>

namespace goanet {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or incomplete configuration (CLI exit status 2).
struct ConfigError : Error {
  using Error::Error;
};

// Arguments outside an operation's domain (CLI exit status 4).
struct DomainError : Error {
  using Error::Error;
};

// Conditioning or convergence failures in numerical routines (CLI exit status 4).
struct NumericalError : Error {
  using Error::Error;
};

// Surrogate fitting failures: degenerate sample sets, flat surfaces (CLI exit status 4).
struct FitError : Error {
  using Error::Error;
};

}  // namespace goanet

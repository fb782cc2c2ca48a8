#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace quenchsig {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

enum class Boundary { periodic, open };

std::string to_string(Boundary bc);

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not honour its contract.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A Bloch vector vanished where a gap is required.
class GaplessError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Wraps a momentum into [-pi, pi).
double wrap_momentum(double k);

}  // namespace quenchsig

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace uhcm {

using Complex = std::complex<double>;

/// Invalid parameters, malformed configuration, out-of-range physics inputs.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A Fock-space cutoff was insufficient or the growth cap was exceeded.
class TruncationError : public std::runtime_error {
  public:
    explicit TruncationError(const std::string& what) : std::runtime_error(what) {}
};

/// A series did not converge within the available orders. Carries the
/// magnitude of the residual estimate at the point of failure.
class SeriesError : public std::runtime_error {
  public:
    SeriesError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual estimate " + std::to_string(residual) + ")"),
          residual_(residual) {}
    double residual() const { return residual_; }

  private:
    double residual_;
};

/// An internal consistency check failed (e.g. an imaginary residue that
/// should vanish exceeded its bound).
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Not enough data or channels to perform the requested estimate.
class DataError : public std::runtime_error {
  public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace uhcm

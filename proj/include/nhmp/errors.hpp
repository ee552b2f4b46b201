#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nhmp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or mismatched input (dimensions, parameters, files).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an operation's contract (wrong case, repeated conversion...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A numeric routine produced a non-finite value or failed to converge.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

class IntegrationDiverged : public Error {
 public:
  IntegrationDiverged(const std::string& what, double last_valid_time)
      : Error(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

/// Numeric rank could not be decided at the requested threshold.
class AmbiguousRank : public Error {
 public:
  using Error::Error;
};

class NotCorankOne : public Error {
 public:
  using Error::Error;
};

/// An invariant (delta, chi) vanishes where the regular formula needs it nonzero.
class SingularInvariant : public Error {
 public:
  using Error::Error;
};

class ModificationOverflow : public Error {
 public:
  ModificationOverflow(const std::string& what, std::size_t segment)
      : Error(what), segment_(segment) {}
  std::size_t segment() const noexcept { return segment_; }

 private:
  std::size_t segment_;
};

class ShootingFailed : public Error {
 public:
  ShootingFailed(const std::string& what, std::vector<double> best_residuals)
      : Error(what), residuals_(std::move(best_residuals)) {}
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

}  // namespace nhmp

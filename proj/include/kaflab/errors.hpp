#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kaflab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be positive definite is not; carries the smallest eigenvalue found.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(const std::string& what, double eigenvalue)
      : Error(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  double eigenvalue_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class SizeCapError : public Error {
 public:
  using Error::Error;
};

/// A recursion or simulation produced a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t last_finite)
      : Error(what), last_finite_(last_finite) {}
  std::int64_t last_finite() const noexcept { return last_finite_; }

 private:
  std::int64_t last_finite_;
};

/// Mean-square instability: refused because spectral radius of K >= 1.
class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& what, double radius)
      : Error(what), radius_(radius) {}
  double radius() const noexcept { return radius_; }

 private:
  double radius_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace kaflab

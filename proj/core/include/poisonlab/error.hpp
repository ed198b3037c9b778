#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace poisonlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_argument"; }
};

/// Malformed input file. `line()` is 1-based, or 0 when no line applies.
class IngestionError : public Error {
public:
  IngestionError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const char* kind() const noexcept override { return "ingestion"; }

private:
  std::size_t line_;
};

/// Lasso training ran out of iterations. `gap()` is the final KKT violation.
class TrainingError : public Error {
public:
  TrainingError(const std::string& what, double gap)
      : Error(what), gap_(gap) {}
  double gap() const noexcept { return gap_; }
  const char* kind() const noexcept override { return "training"; }

private:
  double gap_;
};

/// The KKT matrix of the inner problem is singular or too ill-conditioned
/// for the implicit-function gradient.
class DegenerateHessianError : public Error {
public:
  DegenerateHessianError(const std::string& what, double rcond)
      : Error(what), rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }
  const char* kind() const noexcept override { return "degenerate_hessian"; }

private:
  double rcond_;
};

class IoError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

}  // namespace poisonlab
